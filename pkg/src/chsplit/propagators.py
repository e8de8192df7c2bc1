"""Split-step building blocks for the Cahn-Hilliard flow.

``S_L(t) = exp(-t nu Delta^2)`` is applied exactly as a Fourier multiplier;
``S_N(tau) w = w + tau Delta (w^3 - w)`` is the explicit nonlinear substep.
The ``*_hat`` functions work on raw coefficient arrays and are what the
harness loops call; the public functions wrap them for :class:`RealField`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .spectral import (
    AREA,
    Grid2D,
    MeanZeroError,
    RealField,
    SpectralField,
    coeffs_of,
    field_from_coeffs,
    sobolev_norm,
    to_coeffs,
    to_values,
)

Dealias = Literal["none", "two-thirds"]
Order = Literal["LN", "NL"]


@dataclass(frozen=True)
class SolverParams:
    tau: float
    n: int
    nu: float = 1.0
    dealias: Dealias = "two-thirds"
    order: Order = "LN"

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive (backward flow ill-posed), got {self.tau}")
        if self.dealias not in ("none", "two-thirds"):
            raise ValueError(f"dealias must be 'none' or 'two-thirds', got {self.dealias!r}")
        if self.order not in ("LN", "NL"):
            raise ValueError(f"order must be 'LN' or 'NL', got {self.order!r}")
        Grid2D(self.n)

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.n)

    def with_tau(self, tau: float) -> SolverParams:
        return SolverParams(tau=tau, n=self.n, nu=self.nu, dealias=self.dealias, order=self.order)


@dataclass(frozen=True)
class DefectReport:
    step: int
    defect_l2: float
    bound_rhs: float
    ratio: float
    tau: float


@lru_cache(maxsize=64)
def heat_symbol(n: int, t: float, nu: float) -> np.ndarray:
    """exp(-t nu |k|^4) on the lattice."""
    s = np.exp(-t * nu * Grid2D(n).ksq ** 2)
    s.setflags(write=False)
    return s


def defect_symbol(x: np.ndarray) -> np.ndarray:
    """(1 + x) exp(-x) - 1, accurate for small x."""
    x = np.asarray(x, dtype=float)
    out = (1.0 + x) * np.exp(-x) - 1.0
    small = x < 0.1
    if small.any():
        xs = x[small]
        # Taylor coefficients (-1)^j (1 - j) / j!, j >= 2
        acc = np.zeros_like(xs)
        term = np.ones_like(xs)
        for j in range(1, 16):
            term = term * (-xs) / j
            acc += (1 - j) * term
        out[small] = acc
    return out


def linear_hat(what: np.ndarray, nu: float, t: float) -> np.ndarray:
    return what * heat_symbol(what.shape[0], t, nu)


@lru_cache(maxsize=32)
def _masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    g = Grid2D(n)
    dealias = g.dealias_mask.astype(float)
    keep = (~g.nyquist_mask).astype(float)
    return dealias, keep


def force_hat(what: np.ndarray, dealias: Dealias) -> np.ndarray:
    """Coefficients of f(w) = w^3 - w, with the cube dealiased if requested.

    The -n/2 row and column are always zeroed afterwards.
    """
    mask, keep = _masks(what.shape[0])
    if dealias == "two-thirds":
        v = to_values(what * mask)
        cube = to_coeffs(v * v * v) * mask
    else:
        v = to_values(what)
        cube = to_coeffs(v * v * v)
    return (cube - what) * keep


def nonlinear_hat(what: np.ndarray, tau: float, dealias: Dealias) -> np.ndarray:
    ksq = Grid2D(what.shape[0]).ksq
    return what - tau * ksq * force_hat(what, dealias)


def composed_hat(what: np.ndarray, p: SolverParams) -> np.ndarray:
    if p.order == "LN":
        return linear_hat(nonlinear_hat(what, p.tau, p.dealias), p.nu, p.tau)
    return nonlinear_hat(linear_hat(what, p.nu, p.tau), p.tau, p.dealias)


def _require_mean_zero(u: RealField, name: str) -> np.ndarray:
    c = coeffs_of(u)
    if not SpectralField(u.grid, c).is_mean_zero(1e-10):
        raise MeanZeroError(f"{name} must be mean-zero (mean = {u.mean():.3e})")
    return c


def step_linear(w: RealField, p: SolverParams, t: float | None = None) -> RealField:
    """Exact biharmonic heat flow for time ``t`` (default ``p.tau``)."""
    t = p.tau if t is None else t
    if t < 0:
        raise ValueError(f"t must be nonnegative (backward biharmonic flow is ill-posed), got {t}")
    return field_from_coeffs(w.grid, linear_hat(coeffs_of(w), p.nu, t))


def step_nonlinear(w: RealField, p: SolverParams) -> RealField:
    return field_from_coeffs(w.grid, nonlinear_hat(coeffs_of(w), p.tau, p.dealias))


def step_composed(u_n: RealField, p: SolverParams) -> RealField:
    """One split step: S_L S_N for order LN, S_N S_L for order NL."""
    c = _require_mean_zero(u_n, "u_n")
    return field_from_coeffs(u_n.grid, composed_hat(c, p))


def resolvent_step(u_n: RealField, p: SolverParams) -> RealField:
    """Implicit-Euler comparison step (1 + tau nu Delta^2)^-1 (u + tau Delta f(u))."""
    c = _require_mean_zero(u_n, "u_n")
    g = u_n.grid
    rhs = c - p.tau * g.ksq * force_hat(c, p.dealias)
    return field_from_coeffs(g, rhs / (1.0 + p.tau * p.nu * g.ksq**2))


def defect_hat(what: np.ndarray, p: SolverParams) -> np.ndarray:
    """g = (1 + x)(exp(-x) - (1 + x)^-1)(u + tau Delta f(u)) with x = tau nu |k|^4."""
    g = Grid2D(what.shape[0])
    x = p.tau * p.nu * g.ksq**2
    return defect_symbol(x) * (what - p.tau * g.ksq * force_hat(what, p.dealias))


def defect_field(u_n: RealField, p: SolverParams) -> RealField:
    c = _require_mean_zero(u_n, "u_n")
    return field_from_coeffs(u_n.grid, defect_hat(c, p))


def compute_defect(u_n: RealField, p: SolverParams, d1: float = 1.0, step: int = 0) -> DefectReport:
    """Size of the defect against the resolvent rewrite, with its tau^2 bound.

    ``ratio`` is ``||g||_2 / (tau^2 (||u||_H8 + ||u||_H8^3))``; ``bound_rhs``
    multiplies the denominator by ``d1``.
    """
    c = _require_mean_zero(u_n, "u_n")
    g = defect_hat(c, p)
    defect = float(np.sqrt(np.sum(np.abs(g) ** 2) / AREA))
    h8 = sobolev_norm(u_n, 8.0)
    denom = p.tau**2 * (h8 + h8**3)
    ratio = defect / denom if denom > 0 else 0.0
    return DefectReport(step=step, defect_l2=defect, bound_rhs=d1 * denom, ratio=ratio, tau=p.tau)


def amplification_bound(p: SolverParams) -> float:
    """sup_k (1 + tau |k|^2) exp(-tau nu |k|^4): linear growth of one LN step."""
    ksq = p.grid.ksq
    return float(np.max((1.0 + p.tau * ksq) * np.exp(-p.tau * p.nu * ksq**2)))
