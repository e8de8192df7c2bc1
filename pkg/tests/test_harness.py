import math

import numpy as np
import pytest

from chsplit.energy import calibrate_constants, threshold, uniform_linf_bound
from chsplit.harness import (
    InitialDataSpec,
    convergence_study,
    defect_rate_study,
    modes_field,
    random_corpus,
    random_field,
    run,
    running_max_stabilizes,
    tau_star_bisection,
)
from chsplit.propagators import SolverParams
from chsplit.spectral import Grid2D, MeanZeroError, RealField, forward, sobolev_norm

from conftest import cos_x1

TWO_MODE = InitialDataSpec("modes", modes=((1, 0, 0.5, 0), (1, 1, 0.3, 0)))
# large-amplitude data whose decay threshold sits inside the default bracket
STRONG = ((1, 0, 2.0, 0), (0, 2, 1.2, 0), (2, 1, 0.8, 0))


class TestInitialData:
    def test_modes_exact(self):
        g = Grid2D(16)
        f = InitialDataSpec("modes", modes=((1, 0, 1.0, 0), (0, 2, 0, 1.0))).build(g)
        x1, x2 = g.mesh()
        assert np.abs(f.values - np.cos(x1) - np.sin(2 * x2)).max() < 1e-14

    def test_random_normalized(self):
        f = InitialDataSpec("random", seed=3, band=4, amplitude=2.0).build(Grid2D(32))
        assert sobolev_norm(f, 1.0) == pytest.approx(2.0, rel=1e-13)
        F = forward(f)
        assert F.is_mean_zero() and F.hermitian_defect() < 1e-14
        assert np.all(F.coeffs[np.maximum(np.abs(f.grid.k1), np.abs(f.grid.k2)) > 4] == 0)

    def test_zero_mode_dropped(self):
        f = InitialDataSpec("modes", modes=((0, 0, 1.0, 0), (1, 0, 1.0, 0))).build(Grid2D(16))
        assert abs(f.mean()) < 1e-15

    def test_unrepresentable_mode(self):
        with pytest.raises(ValueError, match="not representable"):
            InitialDataSpec("modes", modes=((8, 0, 1.0, 0),)).build(Grid2D(16))

    def test_file(self, tmp_path):
        from chsplit.io import write_snapshot

        g = Grid2D(16)
        u = random_field(g, 1, 3, 1.0)
        write_snapshot(tmp_path / "u.chf", u.values, 0, 1e-3, 1.0)
        v = InitialDataSpec("file", path=str(tmp_path / "u.chf")).build(g)
        assert np.abs(v.values - u.values).max() < 1e-15


class TestRun:
    def test_zero_field(self):
        d = run(RealField.zeros(Grid2D(16)), SolverParams(1e-2, 16), 5)
        assert len(d.records) == 5
        for r in d.records:
            assert r.E1_quad == 0 and r.E1 == pytest.approx(math.pi**2) and r.linf == 0

    def test_two_mode_decay(self):
        d = run(TWO_MODE, SolverParams(1e-3, 64), 1000)
        assert not d.unstable and d.energy_monotone() and d.certificates_hold()
        mass = d.column("mass")
        assert np.abs(mass).max() < 1e-12
        assert d.records[-1].time == 1000 * 1e-3

    def test_order_nl(self):
        d = run(TWO_MODE, SolverParams(1e-3, 64, order="NL"), 300)
        assert d.energy_monotone() and d.certificates_hold()

    def test_huge_step_unstable(self):
        d = run(InitialDataSpec("modes", modes=STRONG[:1] + ((0, 2, 0.6, 0), (2, 1, 0.4, 0))),
                SolverParams(10.0, 64, nu=0.1), 50)
        assert d.unstable and d.records[-1].unstable
        assert d.final is None

    def test_deterministic(self):
        spec = InitialDataSpec("random", seed=5, band=4, amplitude=1.5)
        a = run(spec, SolverParams(1e-3, 32), 50)
        b = run(spec, SolverParams(1e-3, 32), 50)
        assert a.records == b.records
        assert np.array_equal(a.final.values, b.final.values)

    def test_non_mean_zero_rejected(self):
        f = RealField(Grid2D(16), np.full((16, 16), 0.2))
        with pytest.raises(MeanZeroError):
            run(f, SolverParams(1e-3, 16), 2)

    def test_snapshots(self):
        seen = []
        run(TWO_MODE, SolverParams(1e-3, 16), 10, snapshot_every=4, on_snapshot=lambda n, f: seen.append(n))
        assert seen == [0, 4, 8]

    @pytest.mark.parametrize("k0", [2, 4])
    def test_uniform_hk0(self, k0):
        d = run(InitialDataSpec("random", seed=8, band=4, amplitude=1.0), SolverParams(1e-3, 32), 10000, k0=k0)
        assert running_max_stabilizes(d.column("hk0"), 5000, 1e-10)
        assert running_max_stabilizes(d.column("h1")[1:], 4999, 1e-10)

    def test_uniform_linf_with_calibrated_alpha(self):
        g = Grid2D(32)
        p = SolverParams(1e-3, 32)
        k = calibrate_constants(random_corpus(g, 20, 0, 4, 1.0), p)
        u0 = random_field(g, 100, 4, 1.0)
        d = run(u0, p, 10000)
        alpha = threshold(u0, p, k, probe_steps=5).alpha
        assert max(d.column("linf").max(), d.initial.linf) <= uniform_linf_bound(alpha, p.tau, p.nu)


TAUS = [0.5 * 2.0**-j for j in range(6, 12)]


class TestConvergence:
    @pytest.mark.parametrize("taus", [[0.1, 0.05, 0.03, 0.025], [0.1, 0.05, 0.025]])
    def test_invalid_taus(self, taus):
        with pytest.raises(ValueError):
            convergence_study(TWO_MODE, SolverParams(1e-3, 16), 0.5, taus)

    def test_reference_too_coarse(self):
        with pytest.raises(ValueError, match="tau_ref"):
            convergence_study(TWO_MODE, SolverParams(1e-3, 16), 0.5, TAUS, tau_ref=min(TAUS) / 16)

    def test_first_order(self):
        u0 = InitialDataSpec("modes", modes=((1, 0, 0.5, 0), (0, 2, 0.25, 0)))
        s = convergence_study(u0, SolverParams(1e-3, 32), 0.5, TAUS)
        assert 0.85 <= s.fitted_order <= 1.15
        assert all(a > b for a, b in zip(s.errors, s.errors[1:]))
        assert "order LN" in s.reference_spec

    def test_longer_horizon_not_smaller(self):
        u0 = InitialDataSpec("modes", modes=((1, 0, 0.5, 0), (0, 2, 0.25, 0)))
        taus = [2.0**-j for j in range(3, 7)]
        short = convergence_study(u0, SolverParams(1e-3, 16), 0.5, taus)
        long = convergence_study(u0, SolverParams(1e-3, 16), 1.0, taus)
        assert all(b >= a for a, b in zip(short.errors, long.errors))


class TestDefectStudy:
    def test_cos_x1_rate(self):
        s = defect_rate_study(cos_x1(Grid2D(32)), SolverParams(1e-3, 32), [2.0**-j for j in range(16, 21)])
        assert 1.9 <= s.slope <= 2.1

    def test_zero(self):
        s = defect_rate_study(RealField.zeros(Grid2D(16)), SolverParams(1e-3, 16), [1e-3, 1e-4])
        assert s.defects == [0.0, 0.0] and math.isnan(s.slope)

    def test_corpus_ratio_bounded(self):
        g = Grid2D(32)
        ratios = [
            r
            for f in random_corpus(g, 10, 0, 4, 1.0)
            for r in defect_rate_study(f, SolverParams(1e-3, 32), [2.0**-j for j in range(16, 21)]).ratios
        ]
        assert max(ratios) / min(ratios) < 1e3


class TestBisection:
    def test_smaller_nu_smaller_threshold(self):
        u0 = modes_field(Grid2D(32), STRONG)
        hi = tau_star_bisection(u0, SolverParams(1e-3, 32, 1.0), 100)
        lo = tau_star_bisection(u0, SolverParams(1e-3, 32, 0.25), 100)
        assert not hi.at_bracket_top and not lo.at_bracket_top
        assert lo.tau_star < hi.tau_star

    def test_larger_norm_not_larger_threshold(self):
        g = Grid2D(32)
        stars = [
            tau_star_bisection(modes_field(g, tuple((k1, k2, s * a, b) for k1, k2, a, b in STRONG)),
                               SolverParams(1e-3, 32), 100).tau_star
            for s in (1.0, 1.5, 2.5)
        ]
        assert stars[0] >= stars[1] >= stars[2]

    def test_zero_at_top(self):
        r = tau_star_bisection(RealField.zeros(Grid2D(16)), SolverParams(1e-3, 16), 20)
        assert r.at_bracket_top and r.describe().startswith(">=")

    def test_bad_bracket(self):
        u0 = modes_field(Grid2D(32), STRONG)
        with pytest.raises(ValueError, match="bracket"):
            tau_star_bisection(u0, SolverParams(1e-3, 32, 0.25), 100, tau_lo=1.0, tau_hi=10.0)
