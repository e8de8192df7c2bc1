"""Full runs of the split scheme with per-step diagnostics, plus the
refinement and threshold studies built on them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Callable, Literal, Sequence

import numpy as np

from .energy import (
    CERT_SLACK,
    EnergyUndefinedError,
    bisect_tau_star,
    certificate,
    double_well,
    e1_quadratic_hat,
    monitored_hat,
)
from .propagators import DefectReport, SolverParams, composed_hat, compute_defect
from .spectral import (
    AREA,
    Grid2D,
    MeanZeroError,
    RealField,
    SpectralField,
    coeffs_of,
    field_from_coeffs,
    project_mean_zero,
    sobolev_norm,
    to_values,
)

log = logging.getLogger(__name__)

BLOWUP = 1e6


@dataclass(frozen=True)
class InitialDataSpec:
    """How to build u0.  The result is always real and mean-zero.

    ``modes``:  explicit terms ``(k1, k2, a, b)`` meaning ``a cos(k.x) + b sin(k.x)``.
    ``random``: Gaussian coefficients on ``0 < |k|_inf <= band`` from ``seed``,
                rescaled so that ``||u0||_H1 = amplitude``.
    ``file``:   a CHF1 snapshot at ``path``, projected to mean zero.
    """

    kind: Literal["modes", "random", "file"] = "modes"
    modes: tuple[tuple[int, int, float, float], ...] = ()
    seed: int = 0
    band: int = 4
    amplitude: float = 1.0
    path: str | None = None

    def build(self, grid: Grid2D) -> RealField:
        if self.kind == "modes":
            return modes_field(grid, self.modes)
        if self.kind == "random":
            return random_field(grid, self.seed, self.band, self.amplitude)
        if self.kind == "file":
            from .io import read_snapshot

            if self.path is None:
                raise ValueError("initial data kind 'file' needs a path")
            snap = read_snapshot(self.path)
            if snap.n != grid.n:
                raise ValueError(f"snapshot {self.path} has n={snap.n}, run uses n={grid.n}")
            return project_mean_zero(RealField(grid, snap.values))
        raise ValueError(f"unknown initial data kind {self.kind!r}")


def modes_field(grid: Grid2D, modes: Sequence[tuple[int, int, float, float]]) -> RealField:
    c = np.zeros((grid.n, grid.n), dtype=complex)
    half = grid.n // 2
    for k1, k2, a, b in modes:
        if max(abs(k1), abs(k2)) >= half:
            raise ValueError(f"mode ({k1}, {k2}) not representable on n={grid.n}")
        if k1 == 0 and k2 == 0:
            continue
        z = 0.5 * AREA * complex(a, -b)
        c[grid.index(k1, k2)] += z
        c[grid.index(-k1, -k2)] += z.conjugate()
    return field_from_coeffs(grid, c)


def random_field(grid: Grid2D, seed: int, band: int, h1: float) -> RealField:
    if not 1 <= band < grid.n // 2:
        raise ValueError(f"band must be in [1, n/2), got {band}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    inside = (np.abs(grid.k1) <= band) & (np.abs(grid.k2) <= band)
    z = np.where(inside, z, 0.0)
    mirror = np.ix_((-np.arange(grid.n)) % grid.n, (-np.arange(grid.n)) % grid.n)
    c = 0.5 * (z + np.conj(z[mirror]))
    c[0, 0] = 0.0
    norm = math.sqrt(np.sum((1.0 + grid.ksq) * np.abs(c) ** 2) / AREA)
    return field_from_coeffs(grid, c * (h1 / norm))


def random_corpus(grid: Grid2D, count: int, seed: int = 0, band: int = 4, h1: float = 1.0) -> list[RealField]:
    return [random_field(grid, seed + i, band, h1) for i in range(count)]


@dataclass
class StepRecord:
    step: int
    time: float
    mass: float
    E: float
    E1_quad: float
    E1_pot: float
    E1: float
    linf: float
    h1: float
    hk0: float
    inc_l2: float
    cert_lhs: float
    cert_rhs: float
    cert_ok: bool | None
    unstable: bool = False


@dataclass
class RunDiagnostics:
    """Per-step records of one run.

    ``initial`` describes u0 (no certificate).  For order NL the energy and
    certificate columns refer to S_L(tau) applied to the iterate, the other
    columns to the iterate itself.
    """

    params: SolverParams
    k0: int
    initial: StepRecord
    records: list[StepRecord] = field(default_factory=list)
    unstable: bool = False
    final: RealField | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def certificates_hold(self) -> bool:
        return all(r.cert_ok is True for r in self.records)

    def energy_monotone(self) -> bool:
        """E1 nonincreasing from step 1 on, with relative slack 1e-10."""
        e1 = self.column("E1")
        if not np.all(np.isfinite(e1)):
            return False
        return bool(np.all(e1[1:] <= e1[:-1] + CERT_SLACK * (1.0 + np.abs(e1[:-1]))))


def _hk0_weight(n: int, k0: float) -> np.ndarray:
    return (1.0 + Grid2D(n).ksq) ** k0 / AREA


def _record(
    step: int,
    p: SolverParams,
    c: np.ndarray,
    values: np.ndarray,
    m: np.ndarray,
    m_values: np.ndarray,
    hk0_w: np.ndarray,
) -> tuple[StepRecord, float | None]:
    g = Grid2D(p.n)
    a2 = np.abs(c) ** 2
    pot_state = float(g.weight * np.sum(double_well(values)))
    energy = float(0.5 * p.nu * np.sum(g.ksq * a2) / AREA) + pot_state
    pot = pot_state if m is c else float(g.weight * np.sum(double_well(m_values)))
    try:
        quad = e1_quadratic_hat(m, p.tau, p.nu)
        e1 = quad + pot
    except EnergyUndefinedError:
        quad = e1 = math.nan
    rec = StepRecord(
        step=step,
        time=step * p.tau,
        mass=float(c[0, 0].real),
        E=energy,
        E1_quad=quad,
        E1_pot=pot,
        E1=e1,
        linf=float(np.abs(values).max()),
        h1=float(math.sqrt(np.sum((1.0 + g.ksq) * a2) / AREA)),
        hk0=float(math.sqrt(np.sum(hk0_w * a2))),
        inc_l2=math.nan,
        cert_lhs=math.nan,
        cert_rhs=math.nan,
        cert_ok=None,
    )
    return rec, (None if math.isnan(e1) else e1)


def run(
    u0: InitialDataSpec | RealField,
    p: SolverParams,
    steps: int,
    k0: int = 2,
    snapshot_every: int | None = None,
    on_snapshot: Callable[[int, RealField], None] | None = None,
    blowup: float = BLOWUP,
) -> RunDiagnostics:
    """Iterate the split step ``steps`` times, recording diagnostics after each.

    Aborts early, flagging the run unstable, once ``||u||_inf`` exceeds
    ``blowup`` or stops being finite.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    grid = Grid2D(p.n)
    field0 = u0.build(grid) if isinstance(u0, InitialDataSpec) else u0
    c = coeffs_of(field0)
    if not SpectralField(grid, c).is_mean_zero(1e-10):
        raise MeanZeroError(f"u0 must be mean-zero (mean = {field0.mean():.3e})")
    hk0_w = _hk0_weight(p.n, k0)

    m = monitored_hat(c, p)
    m_values = to_values(m)
    initial, e1_prev = _record(0, p, c, to_values(c), m, m_values, hk0_w)
    diag = RunDiagnostics(params=p, k0=k0, initial=initial)
    if snapshot_every and on_snapshot:
        on_snapshot(0, field_from_coeffs(grid, c))

    for n in range(1, steps + 1):
        c_new = composed_hat(c, p)
        with np.errstate(invalid="ignore", over="ignore"):
            values = to_values(c_new)
            peak = float(np.abs(values).max())
        if not math.isfinite(peak) or peak > blowup:
            log.info("blow-up guard tripped at step %d (|u|_inf = %g)", n, peak)
            nan = math.nan
            diag.records.append(
                StepRecord(n, n * p.tau, float(c_new[0, 0].real), nan, nan, nan, nan, peak, nan, nan, nan, nan, nan, None, True)
            )
            diag.unstable = True
            break
        m_new = monitored_hat(c_new, p)
        m_values_new = values if m_new is c_new else to_values(m_new)
        rec, e1 = _record(n, p, c_new, values, m_new, m_values_new, hk0_w)
        rec.inc_l2 = float(math.sqrt(np.sum(np.abs(c_new - c) ** 2) / AREA))
        inc_m = rec.inc_l2**2 if m_new is c_new else float(np.sum(np.abs(m_new - m) ** 2) / AREA)
        cert = certificate(e1_prev, e1, float(np.abs(m_values).max()), float(np.abs(m_values_new).max()), inc_m, p, n)
        rec.cert_lhs, rec.cert_rhs, rec.cert_ok = cert.lhs, cert.rhs, cert.satisfied
        diag.records.append(rec)
        if snapshot_every and on_snapshot and n % snapshot_every == 0:
            on_snapshot(n, field_from_coeffs(grid, c_new))
        c, m, m_values, e1_prev = c_new, m_new, m_values_new, e1

    if not diag.unstable:
        diag.final = field_from_coeffs(grid, c)
    return diag


@dataclass(frozen=True)
class ConvergenceStudy:
    taus: list[float]
    errors: list[float]
    fitted_order: float
    T: float
    tau_ref: float
    reference_spec: str


def _steps_of(span: float, tau: float, what: str) -> int:
    q = span / tau
    k = round(q)
    if k < 1 or abs(q - k) > 1e-9 * max(1.0, q):
        raise ValueError(f"{what}: {tau:g} does not divide {span:g}")
    return k


def fitted_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def convergence_study(
    u0: InitialDataSpec | RealField,
    p: SolverParams,
    T: float,
    taus: Sequence[float],
    tau_ref: float | None = None,
    reference_order: str | None = None,
) -> ConvergenceStudy:
    """Self-convergence of the split scheme against a fine-step reference.

    Errors are ``sup_{n >= 1, n tau <= T} ||u^n_tau - u_ref(n tau)||_2``.  The
    reference runs on the same grid with step ``tau_ref`` (default
    ``min(taus) / 32``) and order ``reference_order`` (default: the run's).
    Coarse runs advance in lockstep with the reference so no trajectory is
    stored.
    """
    taus = [float(t) for t in taus]
    if len(taus) < 4:
        raise ValueError("a convergence study needs at least 4 time steps")
    tau_ref = tau_ref if tau_ref is not None else min(taus) / 32.0
    if tau_ref > min(taus) / 32.0 * (1.0 + 1e-12):
        raise ValueError(f"tau_ref = {tau_ref:g} must be <= min(taus)/32 = {min(taus) / 32:g}")
    for t in taus:
        _steps_of(T, t, "tau does not divide T")
    ratios = [_steps_of(t, tau_ref, "tau_ref does not divide tau") for t in taus]
    n_ref = _steps_of(T, tau_ref, "tau_ref does not divide T")

    grid = Grid2D(p.n)
    field0 = u0.build(grid) if isinstance(u0, InitialDataSpec) else u0
    c0 = coeffs_of(field0)
    if not SpectralField(grid, c0).is_mean_zero(1e-10):
        raise MeanZeroError("u0 must be mean-zero")
    order = reference_order or p.order
    p_ref = SolverParams(tau_ref, p.n, p.nu, p.dealias, order)
    coarse_params = [p.with_tau(t) for t in taus]
    ref = c0
    coarse = [c0 for _ in taus]
    errors = [0.0 for _ in taus]
    for j in range(1, n_ref + 1):
        ref = composed_hat(ref, p_ref)
        for i, r in enumerate(ratios):
            if j % r == 0:
                coarse[i] = composed_hat(coarse[i], coarse_params[i])
                err = math.sqrt(np.sum(np.abs(coarse[i] - ref) ** 2) / AREA)
                errors[i] = max(errors[i], err)
    spec = f"same scheme, order {order}, tau_ref={tau_ref:g}, n={p.n}, dealias={p.dealias}"
    return ConvergenceStudy(taus, errors, fitted_slope(taus, errors), T, tau_ref, spec)


@dataclass(frozen=True)
class DefectStudy:
    taus: list[float]
    reports: list[DefectReport]
    slope: float

    @property
    def defects(self) -> list[float]:
        return [r.defect_l2 for r in self.reports]

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.reports]


def defect_rate_study(
    u0: InitialDataSpec | RealField,
    p: SolverParams,
    taus: Sequence[float],
    d1: float = 1.0,
) -> DefectStudy:
    """Defect of the first step against the resolvent rewrite over a tau sweep."""
    taus = [float(t) for t in taus]
    field0 = u0.build(Grid2D(p.n)) if isinstance(u0, InitialDataSpec) else u0
    reports = [compute_defect(field0, p.with_tau(t), d1) for t in taus]
    defects = [r.defect_l2 for r in reports]
    slope = fitted_slope(taus, defects) if min(defects) > 0 else math.nan
    return DefectStudy(taus, reports, slope)


@dataclass(frozen=True)
class BisectionResult:
    tau_star: float
    at_bracket_top: bool
    tau_lo: float
    tau_hi: float

    def describe(self) -> str:
        if self.at_bracket_top:
            return f">= {self.tau_hi:g} (bracket top)"
        return f"{self.tau_star:g}"


def tau_star_bisection(
    u0: InitialDataSpec | RealField,
    p: SolverParams,
    probe_steps: int,
    tau_lo: float = 1e-5,
    tau_hi: float = 10.0,
    rtol: float = 0.02,
) -> BisectionResult:
    """Largest tau (to ``rtol``) for which E1 decays over ``probe_steps`` steps."""
    field0 = u0.build(Grid2D(p.n)) if isinstance(u0, InitialDataSpec) else u0
    tau, top = bisect_tau_star(field0, p, probe_steps, tau_lo, tau_hi, rtol)
    return BisectionResult(tau, top, tau_lo, tau_hi)


def running_max_stabilizes(values: Sequence[float], split: int, rtol: float = 1e-10) -> bool:
    """max(values[split:]) <= max(values[:split]) up to relative ``rtol``."""
    v = np.asarray(values, dtype=float)
    head, tail = v[:split].max(), v[split:].max()
    return bool(tail <= head * (1.0 + rtol) + rtol)


RECORD_FIELDS = [f.name for f in fields(StepRecord) if f.name != "unstable"]
