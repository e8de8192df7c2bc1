"""Command-line front end.

    chsplit <subcommand> --config run.cfg [--snapshot-every K]

Subcommands: simulate, converge, kernel-study, defect-study, tau-star,
energy-report.  Exit codes: 0 success, 1 invalid input, 2 the simulated run
tripped the blow-up guard.

The config file holds ``key = value`` lines; ``#`` starts a comment and
unknown keys are errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import energy, harness, io, kernels
from .energy import Constants
from .harness import InitialDataSpec
from .propagators import SolverParams
from .spectral import Grid2D

log = logging.getLogger("chsplit")

SUBCOMMANDS = ("simulate", "converge", "kernel-study", "defect-study", "tau-star", "energy-report")


class ConfigError(ValueError):
    pass


def _default_taus() -> list[float]:
    return [0.5 * 2.0**-j for j in range(6, 12)]


@dataclass
class RunConfig:
    nu: float = 1.0
    tau: float = 1e-3
    n: int = 128
    dealias: str = "two-thirds"
    order: str = "LN"
    steps: int = 1000
    T: float = 0.5
    taus: list[float] = field(default_factory=_default_taus)
    tau_ref: float | None = None
    k0: int = 2
    init: str = "random"
    modes: str = "1,0,0.5,0"
    seed: int = 0
    band: int = 4
    amplitude: float = 1.0
    init_file: str | None = None
    output: str = "diagnostics.csv"
    snapshot_dir: str = "snapshots"
    c: float = 1.0
    c1: float = 1.0
    c0_1: float = 1.0
    c0_2: float = 1.0
    d1: float = 1.0
    kernel_variant: str = "K_tilde"
    p_values: list[float] = field(default_factory=lambda: [math.inf, 2.0, 1.0])
    betas: list[float] = field(default_factory=lambda: [2.0**-j for j in range(4, 15)])
    defect_taus: list[float] = field(default_factory=lambda: [2.0**-j for j in range(16, 21)])
    tau_lo: float = 1e-5
    tau_hi: float = 10.0
    probe_steps: int = 200
    rtol: float = 0.02

    @property
    def params(self) -> SolverParams:
        return SolverParams(tau=self.tau, n=self.n, nu=self.nu, dealias=self.dealias, order=self.order)

    @property
    def constants(self) -> Constants:
        return Constants(self.c, self.c1, self.c0_1, self.c0_2, self.d1)

    @property
    def initial(self) -> InitialDataSpec:
        if self.init == "modes":
            return InitialDataSpec("modes", modes=parse_modes(self.modes))
        if self.init == "file":
            return InitialDataSpec("file", path=self.init_file)
        return InitialDataSpec("random", seed=self.seed, band=self.band, amplitude=self.amplitude)


def parse_modes(text: str) -> tuple[tuple[int, int, float, float], ...]:
    """``"k1,k2,a,b; k1,k2,a,b"`` -> terms ``a cos(k.x) + b sin(k.x)``."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [s.strip() for s in chunk.split(",")]
        if len(parts) != 4:
            raise ValueError(f"mode {chunk!r} needs four entries k1,k2,a,b")
        out.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    if not out:
        raise ValueError("no modes given")
    return tuple(out)


def _float(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "infinity"):
        return math.inf
    return float(s)


def _float_list(s: str) -> list[float]:
    return [_float(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _int(s: str) -> int:
    return int(s.strip())


_PARSERS = {
    "nu": _float, "tau": _float, "n": _int, "dealias": str.strip, "order": str.strip,
    "steps": _int, "T": _float, "taus": _float_list, "tau_ref": _float, "k0": _int,
    "init": str.strip, "modes": str.strip, "seed": _int, "band": _int, "amplitude": _float,
    "init_file": str.strip, "output": str.strip, "snapshot_dir": str.strip,
    "c": _float, "c1": _float, "c0_1": _float, "c0_2": _float, "d1": _float,
    "kernel_variant": str.strip, "p_values": _float_list, "betas": _float_list,
    "defect_taus": _float_list, "tau_lo": _float, "tau_hi": _float, "probe_steps": _int, "rtol": _float,
}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def _positive(name: str, x: float, why: str = "") -> str | None:
    if not (math.isfinite(x) and x > 0):
        return f"{name} must be positive{why}, got {x}"
    return None


def _validate(cfg: RunConfig) -> list[tuple[str, str]]:
    """(key, message) for every violated precondition."""
    errs: list[tuple[str, str]] = []

    def check(key, msg):
        if msg:
            errs.append((key, msg))

    check("nu", _positive("nu", cfg.nu))
    check("tau", _positive("tau", cfg.tau, " (backward flow ill-posed)"))
    if cfg.n < 8 or cfg.n % 2:
        check("n", f"n must be even and >= 8, got {cfg.n}")
    if cfg.dealias not in ("none", "two-thirds"):
        check("dealias", f"dealias must be 'none' or 'two-thirds', got {cfg.dealias!r}")
    if cfg.order not in ("LN", "NL"):
        check("order", f"order must be LN or NL, got {cfg.order!r}")
    if cfg.steps < 1:
        check("steps", f"steps must be >= 1, got {cfg.steps}")
    check("T", _positive("T", cfg.T))
    if len(cfg.taus) < 4:
        check("taus", f"taus needs at least 4 entries, got {len(cfg.taus)}")
    for t in cfg.taus:
        if not (t > 0 and math.isfinite(t)):
            check("taus", f"taus must be positive, got {t}")
        elif abs(cfg.T / t - round(cfg.T / t)) > 1e-9 * max(1.0, cfg.T / t):
            check("taus", f"tau {t:g} does not divide T = {cfg.T:g}")
    if cfg.tau_ref is not None:
        check("tau_ref", _positive("tau_ref", cfg.tau_ref))
        if cfg.taus and cfg.tau_ref > min(cfg.taus) / 32.0 * (1 + 1e-12):
            check("tau_ref", f"tau_ref must be <= min(taus)/32 = {min(cfg.taus) / 32:g}")
    if cfg.k0 < 1:
        check("k0", f"k0 must be >= 1, got {cfg.k0}")
    if cfg.init not in ("modes", "random", "file"):
        check("init", f"init must be modes, random or file, got {cfg.init!r}")
    if cfg.init == "modes":
        try:
            for k1, k2, _, _ in parse_modes(cfg.modes):
                if max(abs(k1), abs(k2)) >= cfg.n // 2:
                    check("modes", f"mode ({k1}, {k2}) not representable on n = {cfg.n}")
        except ValueError as e:
            check("modes", str(e))
    if cfg.init == "random":
        if not 1 <= cfg.band < cfg.n // 2:
            check("band", f"band must be in [1, n/2), got {cfg.band}")
        check("amplitude", _positive("amplitude", cfg.amplitude))
    if cfg.init == "file" and not cfg.init_file:
        check("init_file", "init = file needs init_file")
    for key in ("c", "c1", "c0_1", "c0_2", "d1"):
        check(key, _positive(key, getattr(cfg, key)))
    if cfg.kernel_variant not in ("K", "K_tilde"):
        check("kernel_variant", f"kernel_variant must be K or K_tilde, got {cfg.kernel_variant!r}")
    for p in cfg.p_values:
        if not p >= 1:
            check("p_values", f"p must be in [1, inf], got {p}")
    if len(cfg.betas) < 2 or any(not (b > 0 and math.isfinite(b)) for b in cfg.betas):
        check("betas", "betas needs at least two positive values")
    if len(cfg.defect_taus) < 2 or any(not (t > 0 and math.isfinite(t)) for t in cfg.defect_taus):
        check("defect_taus", "defect_taus needs at least two positive values")
    check("tau_lo", _positive("tau_lo", cfg.tau_lo))
    if not cfg.tau_hi > cfg.tau_lo:
        check("tau_hi", f"tau_hi must exceed tau_lo, got [{cfg.tau_lo}, {cfg.tau_hi}]")
    if cfg.probe_steps < 2:
        check("probe_steps", f"probe_steps must be >= 2, got {cfg.probe_steps}")
    check("rtol", _positive("rtol", cfg.rtol))
    return errs


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a ``key = value`` config."""
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in lines:
            raise ConfigError(f"line {lineno}: key {key!r} already set on line {lines[key]}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key}: cannot parse {value!r}") from None
        lines[key] = lineno
    cfg = RunConfig(**values)
    errs = _validate(cfg)
    if errs:
        key, msg = errs[0]
        where = f"line {lines[key]}: " if key in lines else ""
        raise ConfigError(f"{where}{key}: {msg}")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from None
    return parse_config(text)


def _emit(summary: dict) -> None:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return str(x)
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, list):
            return [clean(v) for v in x]
        return x

    print(json.dumps(clean(summary), sort_keys=True))


def cmd_simulate(cfg: RunConfig, snapshot_every: int | None) -> int:
    p = cfg.params
    on_snapshot = None
    if snapshot_every:
        outdir = Path(cfg.snapshot_dir)
        outdir.mkdir(parents=True, exist_ok=True)

        def on_snapshot(step, f):
            io.write_snapshot(outdir / f"snap_{step:08d}.chf", f.values, step, p.tau, p.nu)

    d = harness.run(cfg.initial, p, cfg.steps, k0=cfg.k0, snapshot_every=snapshot_every, on_snapshot=on_snapshot)
    io.write_diagnostics(d, cfg.output)
    _emit({
        "subcommand": "simulate",
        "steps_completed": len(d.records) - (1 if d.unstable else 0),
        "unstable": d.unstable,
        "certificates_hold": d.certificates_hold(),
        "energy_monotone": d.energy_monotone(),
        "output": cfg.output,
    })
    return 2 if d.unstable else 0


def cmd_converge(cfg: RunConfig) -> int:
    study = harness.convergence_study(cfg.initial, cfg.params, cfg.T, cfg.taus, cfg.tau_ref)
    io.write_table(cfg.output, ["tau", "error"], [[t, e] for t, e in zip(study.taus, study.errors)])
    _emit({"subcommand": "converge", "fitted_order": study.fitted_order, "taus": study.taus,
           "errors": study.errors, "reference": study.reference_spec, "output": cfg.output})
    return 0


def cmd_kernel_study(cfg: RunConfig) -> int:
    rows, fitted = [], {}
    for p in cfg.p_values:
        res = kernels.kernel_norm_sweep(cfg.kernel_variant, p, cfg.betas)
        fitted[str(p)] = {"fitted": res[0].fitted_exponent, "predicted": res[0].predicted_exponent}
        rows += [[r.variant, r.p, r.beta, r.norm_value, r.predicted_exponent, r.fitted_exponent] for r in res]
    io.write_table(cfg.output, ["variant", "p", "beta", "norm", "predicted_exponent", "fitted_exponent"], rows)
    _emit({"subcommand": "kernel-study", "exponents": fitted, "output": cfg.output})
    return 0


def cmd_defect_study(cfg: RunConfig) -> int:
    study = harness.defect_rate_study(cfg.initial, cfg.params, cfg.defect_taus, cfg.d1)
    rows = [[r.tau, r.defect_l2, r.bound_rhs, r.ratio] for r in study.reports]
    io.write_table(cfg.output, ["tau", "defect_l2", "bound_rhs", "ratio"], rows)
    _emit({"subcommand": "defect-study", "slope": study.slope, "output": cfg.output})
    return 0


def cmd_tau_star(cfg: RunConfig) -> int:
    u0 = cfg.initial.build(Grid2D(cfg.n))
    est = energy.threshold(u0, cfg.params, cfg.constants, cfg.probe_steps, cfg.tau_lo, cfg.tau_hi, cfg.rtol)
    _emit({"subcommand": "tau-star", "alpha": est.alpha, "tau_star_formula": est.tau_star_formula,
           "tau_star_empirical": est.tau_star_empirical, "at_bracket_top": est.empirical_at_bracket_top,
           "e1_u1": est.e1_u1, "constants": asdict(est.constants)})
    return 0


def cmd_energy_report(cfg: RunConfig) -> int:
    p = cfg.params
    u0 = cfg.initial.build(p.grid)
    rep = energy.modified_energy(u0, p)
    holds, margin = energy.symbol_inequality(p.grid, p.tau, p.nu)
    bounds = energy.potential_bounds(u0)
    e1_b, linf_b = energy.first_step_bounds(rep.h1, p.tau, p.nu, cfg.constants)
    _emit({"subcommand": "energy-report", "energy": asdict(rep), "symbol_inequality": holds,
           "symbol_margin": margin, "potential_bounds": asdict(bounds),
           "first_step_bounds": {"e1": e1_b, "linf": linf_b}})
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="chsplit", description="Split-step Cahn-Hilliard solver and verification harness")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="key = value run configuration")
    ap.add_argument("--snapshot-every", type=int, default=None, metavar="K",
                    help="write a CHF1 snapshot every K steps (simulate only)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        if args.snapshot_every is not None and args.snapshot_every < 1:
            raise ConfigError(f"--snapshot-every must be >= 1, got {args.snapshot_every}")
        cfg = load_config(args.config)
        if args.subcommand == "simulate":
            return cmd_simulate(cfg, args.snapshot_every)
        return {
            "converge": cmd_converge,
            "kernel-study": cmd_kernel_study,
            "defect-study": cmd_defect_study,
            "tau-star": cmd_tau_star,
            "energy-report": cmd_energy_report,
        }[args.subcommand](cfg)
    except (ValueError, OSError) as e:
        print(f"chsplit: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
