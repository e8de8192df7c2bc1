"""Periodic biharmonic heat kernels and the smoothing estimates they give.

K = F^-1(exp(-beta |k|^4)) and its mean-zero part K_tilde = K - (2 pi)^-2.
Scaling exponents of ||K_tilde||_p in beta are measured by least squares over
a beta sweep; the continuum kernel K_w gives an independent check through
Poisson summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .spectral import (
    AREA,
    Grid2D,
    MeanZeroError,
    RealField,
    SpectralField,
    coeffs_of,
    field_from_coeffs,
    lp_norm,
)

Variant = Literal["K", "K_tilde"]
Smoothing = Literal["Linf_from_L4", "Laplacian_Linf_from_L43"]

_GUARD = 1e-14


@dataclass(frozen=True)
class KernelStudyResult:
    beta: float
    p: float
    norm_value: float
    predicted_exponent: float
    fitted_exponent: float
    variant: str = "K_tilde"
    n: int = 0


def predicted_exponent(p: float, d: int = 2) -> float:
    """-d (1/4 - 1/(4p))."""
    inv = 0.0 if p == math.inf else 1.0 / p
    return -d * (0.25 - 0.25 * inv) + 0.0  # no negative zero at p = 1


def min_grid_size(beta: float) -> int:
    """Smallest even n >= 8 with exp(-beta (n/3)^4) < 1e-14."""
    kmin = (math.log(1.0 / _GUARD) / beta) ** 0.25
    n = max(8, int(math.floor(3.0 * kmin)) + 1)
    n += n % 2
    while math.exp(-beta * (n / 3.0) ** 4) >= _GUARD:
        n += 2
    return n


def kernel_coeffs(beta: float, variant: Variant, grid: Grid2D) -> np.ndarray:
    c = np.exp(-beta * grid.ksq**2).astype(complex)
    if variant == "K_tilde":
        c[0, 0] = 0.0
    elif variant != "K":
        raise ValueError(f"variant must be 'K' or 'K_tilde', got {variant!r}")
    return c


def build_kernel(beta: float, variant: Variant, n: int) -> RealField:
    """Nodal values of the periodic kernel at resolution ``n``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    grid = Grid2D(n)
    if math.exp(-beta * (n / 3.0) ** 4) >= _GUARD:
        raise ValueError(
            f"n={n} does not resolve the kernel at beta={beta:g}; need n >= {min_grid_size(beta)}"
        )
    return field_from_coeffs(grid, kernel_coeffs(beta, variant, grid))


def continuum_kernel(points: np.ndarray, beta: float, m: int = 2048, cutoff: float = 12.0) -> np.ndarray:
    """K_w(x) = (2 pi)^-2 int exp(i xi.x) exp(-beta |xi|^4) d xi by midpoint quadrature.

    The integral is truncated to |xi|_inf <= cutoff * beta^-1/4 with ``m`` nodes
    per axis.  The integrand is even in each coordinate, so only the cosine
    parts survive and the sum factors as cos(xi1 x1) G cos(xi2 x2).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    L = cutoff * beta**-0.25
    h = 2.0 * L / m
    xi = -L + h * (np.arange(m) + 0.5)
    G = np.exp(-beta * (xi[:, None] ** 2 + xi[None, :] ** 2) ** 2)
    A = np.cos(np.outer(xi, pts[:, 0]))
    B = np.cos(np.outer(xi, pts[:, 1]))
    return np.einsum("im,im->m", A, G @ B) * h**2 / AREA


def periodized_kernel(points: np.ndarray, beta: float, images: int = 3, **quad) -> np.ndarray:
    """sum over |l|_inf <= images of K_w(x + 2 pi l)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    shifts = 2.0 * np.pi * np.array(
        [(a, b) for a in range(-images, images + 1) for b in range(-images, images + 1)], dtype=float
    )
    shifted = (pts[:, None, :] + shifts[None, :, :]).reshape(-1, 2)
    return continuum_kernel(shifted, beta, **quad).reshape(len(pts), -1).sum(axis=1)


def evaluate_kernel(points: np.ndarray, beta: float, variant: Variant = "K", kmax: int | None = None) -> np.ndarray:
    """Spectral sum (2 pi)^-2 sum_k c_k exp(i k.x) at arbitrary points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    kmax = kmax or int(math.ceil((math.log(1.0 / _GUARD) / beta) ** 0.25)) + 1
    k = np.arange(-kmax, kmax + 1)
    w = np.exp(-beta * (k[:, None] ** 2 + k[None, :] ** 2) ** 2)
    if variant == "K_tilde":
        w[kmax, kmax] = 0.0
    A = np.cos(np.outer(k, pts[:, 0]))
    S = np.sin(np.outer(k, pts[:, 0]))
    B = np.cos(np.outer(k, pts[:, 1]))
    T = np.sin(np.outer(k, pts[:, 1]))
    # Re exp(i(k1 x1 + k2 x2)) = cos cos - sin sin
    return (np.einsum("im,im->m", A, w @ B) - np.einsum("im,im->m", S, w @ T)) / AREA


def sweep_grid_size(betas: Sequence[float]) -> int:
    """Power-of-two n passing the resolution guard and exceeding 10 beta^-1/4 for every beta."""
    b = min(betas)
    need = max(min_grid_size(b), int(math.ceil(10.0 * b**-0.25)))
    n = 8
    while n < need:
        n *= 2
    return n


def fit_exponent(betas: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(betas), np.log(values), 1)[0])


def kernel_norm_sweep(
    variant: Variant,
    p: float,
    betas: Sequence[float],
    n: int | None = None,
) -> list[KernelStudyResult]:
    """L^p norms of the kernel over ``betas`` and the fitted log-log slope."""
    betas = [float(b) for b in betas]
    if len(betas) < 2:
        raise ValueError("need at least two beta values")
    n = n or sweep_grid_size(betas)
    values = [lp_norm(build_kernel(b, variant, n), p) for b in betas]
    slope = fit_exponent(betas, values)
    pred = predicted_exponent(p)
    return [KernelStudyResult(b, p, v, pred, slope, variant, n) for b, v in zip(betas, values)]


def smoothing_ratio(g: RealField, nu: float, tau: float, which: Smoothing = "Linf_from_L4") -> float:
    """Empirical lower bound for the constant of a smoothing estimate.

    ``Linf_from_L4``:            ||exp(-nu tau D^2) g||_inf / ((nu tau)^-1/8 ||g||_4)
    ``Laplacian_Linf_from_L43``: ||tau D exp(-nu tau D^2) g||_inf / (tau (nu tau)^-7/8 ||g||_4/3)
    """
    c = coeffs_of(g)
    beta = nu * tau
    heat = np.exp(-beta * g.grid.ksq**2)
    if which == "Linf_from_L4":
        if not SpectralField(g.grid, c).is_mean_zero(1e-10):
            raise MeanZeroError("the L4 -> Linf estimate needs a mean-zero g")
        denom = beta**-0.125 * lp_norm(g, 4)
        num = lp_norm(field_from_coeffs(g.grid, c * heat), math.inf)
    elif which == "Laplacian_Linf_from_L43":
        denom = tau * beta**-0.875 * lp_norm(g, 4.0 / 3.0)
        num = lp_norm(field_from_coeffs(g.grid, -tau * g.grid.ksq * heat * c), math.inf)
    else:
        raise ValueError(f"unknown smoothing estimate {which!r}")
    if denom == 0:
        raise ValueError("g has zero norm")
    return num / denom


def smoothing_sweep(
    corpus: Sequence[RealField],
    nu: float,
    taus: Sequence[float],
    which: Smoothing = "Linf_from_L4",
) -> np.ndarray:
    """Ratios for every (field, tau) pair, shape (len(corpus), len(taus))."""
    return np.array([[smoothing_ratio(g, nu, t, which) for t in taus] for g in corpus])


def periodic_convolution(w: RealField, kernel: RealField) -> RealField:
    """(K * w)(x_i) = sum_j K(x_i - x_j) w(x_j) spacing^2, by direct summation."""
    n = w.grid.n
    K = kernel.values
    # the kernel node index n/2 sits at x = 0; node offsets wrap modulo n
    out = np.zeros((n, n))
    wv = w.values
    idx = np.arange(n)
    for a in range(n):
        for b in range(n):
            out[a, b] = np.sum(K[np.ix_((a - idx + n // 2) % n, (b - idx + n // 2) % n)] * wv)
    return RealField(w.grid, out * w.grid.weight)
