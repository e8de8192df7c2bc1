"""Ginzburg-Landau energy, the split-scheme modified energy E1, and the
one-step stability certificate built on it.

E1(w) = (1/2 tau) || |grad|^-1 (exp(tau nu Delta^2) - 1)^(1/2) w ||_2^2 + 1/4 int (w^2 - 1)^2

The quadratic part weights mode k by exp(tau nu |k|^4), so it is evaluated
from the exact spectrum a field carries (see :mod:`chsplit.spectral`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .propagators import SolverParams, composed_hat, linear_hat
from .spectral import (
    AREA,
    Grid2D,
    MeanZeroError,
    RealField,
    SpectralField,
    coeffs_of,
    lp_norm,
    sobolev_norm,
    to_values,
)

# above this exponent expm1 is replaced by a log-space evaluation
_LOG_SPACE_EXPONENT = 500.0
CERT_SLACK = 1e-10


class EnergyUndefinedError(ArithmeticError):
    """E1 overflows: the field is too rough for this resolution and tau."""


def double_well(u):
    """F(u) = (u^2 - 1)^2 / 4."""
    return 0.25 * (u * u - 1.0) ** 2


def double_well_force(u):
    """f(u) = F'(u) = u^3 - u."""
    return u * u * u - u


@dataclass(frozen=True)
class EnergyReport:
    e_classical: float
    e1_quadratic: float
    e1_potential: float
    e1_total: float
    mass: float
    linf: float
    h1: float


@dataclass(frozen=True)
class StabilityCertificate:
    """Both sides of the one-step inequality

    E1(u) - E1(w) + (1/2 + sqrt(2 nu / tau)) ||u - w||^2 <= (3/2) max(|u|_inf^2, |w|_inf^2) ||u - w||^2.

    ``satisfied`` is ``None`` when E1 could not be evaluated.
    """

    step: int
    lhs: float
    rhs: float
    increment_l2: float
    satisfied: bool | None


@dataclass(frozen=True)
class Constants:
    """Unspecified absolute constants of the stability and defect estimates."""

    c: float = 1.0
    c1: float = 1.0
    c0_1: float = 1.0
    c0_2: float = 1.0
    d1: float = 1.0

    def __post_init__(self):
        for name in ("c", "c1", "c0_1", "c0_2", "d1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"constant {name} must be positive, got {v}")


@dataclass(frozen=True)
class ThresholdEstimate:
    alpha: float
    tau_star_formula: float
    tau_star_empirical: float
    empirical_at_bracket_top: bool
    e1_u1: float
    constants: Constants


@dataclass(frozen=True)
class PotentialBounds:
    e_p: float
    l4: float
    f_l43: float
    ratio_l4: float
    ratio_f: float


def potential_energy(u: RealField) -> float:
    return float(u.grid.weight * np.sum(double_well(u.values)))


def gradient_energy(u: RealField, nu: float) -> float:
    """nu/2 ||grad u||_2^2 by Parseval."""
    c = coeffs_of(u)
    return float(0.5 * nu * np.sum(u.grid.ksq * np.abs(c) ** 2) / AREA)


def classical_energy(u: RealField, nu: float) -> float:
    return gradient_energy(u, nu) + potential_energy(u)


@lru_cache(maxsize=64)
def _e1_tables(n: int, tau: float, nu: float):
    ksq = Grid2D(n).ksq
    x = tau * nu * ksq**2
    nonzero = ksq > 0
    denom = np.where(nonzero, 2.0 * tau * ksq * AREA, 1.0)
    small = nonzero & (x <= _LOG_SPACE_EXPONENT)
    weight = np.zeros_like(x)
    weight[small] = np.expm1(x[small]) / denom[small]
    big = x > _LOG_SPACE_EXPONENT
    log_weight = x[big] - np.log(denom[big])
    return weight, big, log_weight


def e1_quadratic_hat(c: np.ndarray, tau: float, nu: float) -> float:
    """Quadratic part of E1 from coefficients; raises EnergyUndefinedError on overflow."""
    weight, big, log_weight = _e1_tables(c.shape[0], tau, nu)
    a2 = c.real**2 + c.imag**2
    q = float(np.sum(weight * a2))
    if big.any():
        ab = a2[big]
        live = ab > 0
        if live.any():
            with np.errstate(over="ignore"):
                q += float(np.sum(np.exp(log_weight[live] + np.log(ab[live]))))
    if not math.isfinite(q):
        raise EnergyUndefinedError(f"E1 undefined at this resolution/tau (n={c.shape[0]}, tau={tau:g})")
    return q


def _mean_zero_coeffs(w: RealField, name: str = "w") -> np.ndarray:
    c = coeffs_of(w)
    if not SpectralField(w.grid, c).is_mean_zero(1e-10):
        raise MeanZeroError(f"{name} must be mean-zero (mean = {w.mean():.3e})")
    return c


def modified_energy(w: RealField, p: SolverParams) -> EnergyReport:
    c = _mean_zero_coeffs(w)
    quad = e1_quadratic_hat(c, p.tau, p.nu)
    pot = potential_energy(w)
    return EnergyReport(
        e_classical=classical_energy(w, p.nu),
        e1_quadratic=quad,
        e1_potential=pot,
        e1_total=quad + pot,
        mass=float(c[0, 0].real),
        linf=lp_norm(w, np.inf),
        h1=sobolev_norm(w, 1.0),
    )


def e1_total(w: RealField, p: SolverParams) -> float:
    return e1_quadratic_hat(_mean_zero_coeffs(w), p.tau, p.nu) + potential_energy(w)


def certificate(
    e1_w: float | None,
    e1_u: float | None,
    linf_w: float,
    linf_u: float,
    increment_l2: float,
    p: SolverParams,
    step: int = 0,
) -> StabilityCertificate:
    """Assemble a certificate from precomputed pieces (``None`` energies mean undefined)."""
    rhs = 1.5 * max(linf_u, linf_w) ** 2 * increment_l2
    if e1_w is None or e1_u is None:
        return StabilityCertificate(step, math.nan, rhs, increment_l2, None)
    lhs = e1_u - e1_w + (0.5 + math.sqrt(2.0 * p.nu / p.tau)) * increment_l2
    ok = lhs <= rhs + CERT_SLACK * (1.0 + abs(lhs) + abs(rhs))
    return StabilityCertificate(step, lhs, rhs, increment_l2, bool(ok))


def certify_step(w: RealField, u: RealField, p: SolverParams, step: int = 0) -> StabilityCertificate:
    cw = _mean_zero_coeffs(w, "w")
    cu = _mean_zero_coeffs(u, "u")
    inc = float(np.sum(np.abs(cu - cw) ** 2) / AREA)
    try:
        e1_w = e1_total(w, p)
        e1_u = e1_total(u, p)
    except EnergyUndefinedError:
        e1_w = e1_u = None
    return certificate(e1_w, e1_u, lp_norm(w, np.inf), lp_norm(u, np.inf), inc, p, step)


def symbol_inequality(grid: Grid2D, tau: float, nu: float) -> tuple[bool, float]:
    """Check (exp(x) + 1) / (2 tau |k|^2) >= sqrt(2 nu / tau), x = tau nu |k|^4, on every k != 0.

    Returns ``(holds, margin)`` with ``margin`` the smallest log-ratio of the
    two sides (evaluated in log space so large x cannot overflow).
    """
    ksq = grid.ksq[grid.ksq > 0]
    x = tau * nu * ksq**2
    log_lhs = np.logaddexp(x, 0.0) - np.log(2.0 * tau * ksq)
    margin = float(np.min(log_lhs - 0.5 * np.log(2.0 * nu / tau)))
    return margin >= -1e-14, margin


def potential_bounds(v: RealField) -> PotentialBounds:
    """Potential energy E_p of ``v`` and the two ratios it controls:
    ||v||_4 / (1 + E_p^1/4) and ||v^3 - v||_4/3 / (E_p^1/2 (1 + E_p^1/4)).
    0/0 is read as 0."""
    e_p = potential_energy(v)
    l4 = lp_norm(v, 4)
    fv = double_well_force(v.values)
    f_l43 = float((v.grid.weight * np.sum(np.abs(fv) ** (4.0 / 3.0))) ** 0.75)
    q = e_p**0.25
    d = math.sqrt(e_p) * (1.0 + q)
    return PotentialBounds(e_p, l4, f_l43, l4 / (1.0 + q), f_l43 / d if d > 0 else 0.0)


def alpha_value(e1_u1: float, h1_u0: float, nu: float, k: Constants) -> float:
    q = e1_u1**0.25
    return max(
        k.c1 * (1.0 + q),
        k.c1 * math.sqrt(e1_u1) * (1.0 + q),
        k.c0_2 * (1.0 + 1.0 / nu) * (h1_u0 + h1_u0**3),
    )


def tau_star_formula(alpha: float, nu: float, c: float = 1.0) -> float:
    return c * min(alpha**-8, alpha ** (-8.0 / 3.0)) * nu**3


def uniform_linf_bound(alpha: float, tau: float, nu: float) -> float:
    """alpha (nu tau)^-1/8 + alpha tau (nu tau)^-7/8."""
    b = nu * tau
    return alpha * b**-0.125 + alpha * tau * b**-0.875


def step_linf_bound(e1_w: float, tau: float, nu: float, c1: float = 1.0) -> float:
    """Bound on ||S_L S_N w||_inf in terms of E1(w)."""
    b = nu * tau
    q = 1.0 + e1_w**0.25
    return c1 * b**-0.125 * q + c1 * tau * b**-0.875 * math.sqrt(e1_w) * q


def first_step_bounds(h1_u0: float, tau: float, nu: float, k: Constants) -> tuple[float, float]:
    """(E1(u1) bound, ||u1||_inf bound) in terms of ||u0||_H1."""
    e1 = k.c0_1 * (1.0 + nu + 1.0 / nu) ** 4 * (1.0 + h1_u0**3) ** 4
    linf = k.c0_2 * (nu * tau) ** -0.125 * (1.0 + 1.0 / nu) * (h1_u0 + h1_u0**3)
    return e1, linf


def monitored_hat(c: np.ndarray, p: SolverParams) -> np.ndarray:
    """State whose E1 the run tracks.

    For order LN this is the iterate itself.  For order NL it is S_L(tau)
    applied to the iterate; those fields form an LN trajectory, whereas the
    raw S_N output keeps undamped high modes on which E1 is not finite.
    """
    return c if p.order == "LN" else linear_hat(c, p.nu, p.tau)


def energy_decays(u0: RealField, p: SolverParams, steps: int, blowup: float = 1e6) -> bool:
    """True if E1 is nonincreasing from step 1 to ``steps`` (slack 1e-10 relative)."""
    c = _mean_zero_coeffs(u0, "u0")
    prev = None
    for _ in range(steps):
        c = composed_hat(c, p)
        m = monitored_hat(c, p)
        values = to_values(m)
        if not np.all(np.isfinite(values)) or np.abs(values).max() > blowup:
            return False
        try:
            e1 = e1_quadratic_hat(m, p.tau, p.nu) + float(Grid2D(p.n).weight * np.sum(double_well(values)))
        except EnergyUndefinedError:
            return False
        if prev is not None and e1 > prev + CERT_SLACK * (1.0 + abs(prev)):
            return False
        prev = e1
    return True


def bisect_tau_star(
    u0: RealField,
    p: SolverParams,
    probe_steps: int,
    tau_lo: float,
    tau_hi: float,
    rtol: float = 0.02,
    scan: float = 2.0,
) -> tuple[float, bool]:
    """Largest tau such that E1 decays at every probed step size up to it.

    Decay is not monotone in tau: a very large step damps every mode through
    exp(-tau nu |k|^4), so the top of the bracket can pass while an
    intermediate window fails.  The bracket is therefore scanned upward on a
    geometric grid (factor ``scan``) for the first failure, and bisection then
    runs between the last passing and the first failing probe.

    Returns ``(tau, at_top)``; ``at_top`` means no probe up to ``tau_hi``
    failed, so the threshold is at least the bracket top.
    """
    if not 0 < tau_lo < tau_hi:
        raise ValueError(f"need 0 < tau_lo < tau_hi, got [{tau_lo}, {tau_hi}]")
    if not energy_decays(u0, p.with_tau(tau_lo), probe_steps):
        raise ValueError(f"E1 does not decay at tau_lo = {tau_lo:g}; bracket rejected")
    lo = tau_lo
    while True:
        hi = min(lo * scan, tau_hi)
        if not energy_decays(u0, p.with_tau(hi), probe_steps):
            break
        if hi >= tau_hi:
            return tau_hi, True
        lo = hi
    while hi / lo > 1.0 + rtol:
        mid = math.sqrt(lo * hi)
        if energy_decays(u0, p.with_tau(mid), probe_steps):
            lo = mid
        else:
            hi = mid
    return lo, False


def threshold(
    u0: RealField,
    p: SolverParams,
    constants: Constants = Constants(),
    probe_steps: int = 200,
    tau_lo: float = 1e-5,
    tau_hi: float = 10.0,
    rtol: float = 0.02,
) -> ThresholdEstimate:
    """alpha and tau* from the stability theorem, next to a bisection estimate."""
    c0 = _mean_zero_coeffs(u0, "u0")
    # u1 = S_L S_N u0 regardless of the run's order
    u1 = composed_hat(c0, SolverParams(p.tau, p.n, p.nu, p.dealias, "LN"))
    g = u0.grid
    e1_u1 = e1_quadratic_hat(u1, p.tau, p.nu) + float(g.weight * np.sum(double_well(to_values(u1))))
    a = alpha_value(e1_u1, sobolev_norm(u0, 1.0), p.nu, constants)
    emp, top = bisect_tau_star(u0, p, probe_steps, tau_lo, tau_hi, rtol)
    return ThresholdEstimate(
        alpha=a,
        tau_star_formula=tau_star_formula(a, p.nu, constants.c),
        tau_star_empirical=emp,
        empirical_at_bracket_top=top,
        e1_u1=e1_u1,
        constants=constants,
    )


def calibrate_constants(corpus: list[RealField], p: SolverParams, base: Constants = Constants()) -> Constants:
    """Fit c1, c0_1, c0_2 as the largest observed ratios over ``corpus``.

    c1 comes from the one-step sup-norm bound (w -> S_L S_N w in terms of
    E1(w)); c0_1 and c0_2 from the first-step bounds in terms of ||u0||_H1.
    ``c`` and ``d1`` are carried over from ``base``.
    """
    ln = SolverParams(p.tau, p.n, p.nu, p.dealias, "LN")
    c1 = c01 = c02 = 0.0
    for u0 in corpus:
        c0 = _mean_zero_coeffs(u0, "u0")
        h1 = sobolev_norm(u0, 1.0)
        u1 = composed_hat(c0, ln)
        v1 = to_values(u1)
        e1_u1 = e1_quadratic_hat(u1, p.tau, p.nu) + float(u0.grid.weight * np.sum(double_well(v1)))
        unit = Constants()
        e1_bound, linf_bound = first_step_bounds(h1, p.tau, p.nu, unit)
        c01 = max(c01, e1_u1 / e1_bound)
        if linf_bound > 0:
            c02 = max(c02, np.abs(v1).max() / linf_bound)
        # the sup-norm step bound, applied to w = u1 -> u2
        u2 = composed_hat(u1, ln)
        c1 = max(c1, np.abs(to_values(u2)).max() / step_linf_bound(e1_u1, p.tau, p.nu))
    return Constants(
        c=base.c,
        c1=float(c1) or base.c1,
        c0_1=float(c01) or base.c0_1,
        c0_2=float(c02) or base.c0_2,
        d1=base.d1,
    )
