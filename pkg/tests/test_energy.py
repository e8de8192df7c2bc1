import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chsplit.energy import (
    Constants,
    EnergyUndefinedError,
    alpha_value,
    calibrate_constants,
    certify_step,
    classical_energy,
    potential_bounds,
    modified_energy,
    symbol_inequality,
    tau_star_formula,
    threshold,
    uniform_linf_bound,
)
from chsplit.harness import fitted_slope, modes_field, random_corpus, random_field
from chsplit.propagators import SolverParams, step_composed, step_linear
from chsplit.spectral import Grid2D, MeanZeroError, RealField, sobolev_norm

from conftest import band_field, bands, cos_x1, seeds

PI2 = math.pi**2


class TestClassicalEnergy:
    def test_well_minimum(self, grid32):
        assert classical_energy(RealField(grid32, np.ones((32, 32))), 1.0) == 0.0

    def test_zero(self, grid32):
        assert classical_energy(RealField.zeros(grid32), 1.0) == pytest.approx(PI2, rel=1e-14)

    def test_cos_x1(self, grid32):
        assert classical_energy(cos_x1(grid32), 1.0) == pytest.approx(11 / 8 * PI2, rel=1e-13)


class TestModifiedEnergy:
    def test_cos_x1(self, grid32):
        r = modified_energy(cos_x1(grid32), SolverParams(0.1, 32))
        assert r.e1_quadratic == pytest.approx(math.expm1(0.1) * PI2 / 0.1, rel=1e-13)
        assert r.e1_quadratic == pytest.approx(10.380, abs=1e-3)
        assert r.e1_potential == pytest.approx(3 / 8 * PI2, rel=1e-13)
        assert r.e1_total == r.e1_quadratic + r.e1_potential

    def test_zero(self, grid32):
        r = modified_energy(RealField.zeros(grid32), SolverParams(0.1, 32))
        assert r.e1_quadratic == 0 and r.e1_potential == pytest.approx(PI2, rel=1e-14)

    def test_log_space_branch(self, grid32):
        # tau nu |k|^4 = 625 > 500 for cos 5 x1 at tau = 1; the amplitude cancels the
        # growth, leaving 2 modes * (2 pi^2)^2 / (2 * 25 * 4 pi^2) = pi^2 / 25
        a = math.exp(-312.5)
        w = cos_x1(grid32, k=5, a=a)
        q = modified_energy(w, SolverParams(1.0, 32)).e1_quadratic
        assert q == pytest.approx(PI2 / 25, rel=1e-12)

    def test_zero_coefficients_never_overflow(self, grid32):
        r = modified_energy(cos_x1(grid32), SolverParams(100.0, 32))
        assert math.isfinite(r.e1_total)

    def test_rough_field_undefined(self, grid32):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((32, 32))
        w = RealField(grid32, v - v.mean())
        with pytest.raises(EnergyUndefinedError, match="undefined"):
            modified_energy(w, SolverParams(1.0, 32))

    def test_requires_mean_zero(self, grid32):
        with pytest.raises(MeanZeroError):
            modified_energy(RealField(grid32, np.full((32, 32), 0.5)), SolverParams(0.1, 32))

    @given(seeds, bands)
    def test_report_invariants(self, seed, band):
        r = modified_energy(band_field(32, seed, band, 2.0), SolverParams(1e-3, 32))
        assert r.e1_potential >= 0 and r.e_classical >= 0
        assert r.e1_total == r.e1_quadratic + r.e1_potential

    def test_converges_to_classical_energy(self):
        w = band_field(32, 11, 3)
        taus = [1e-2 / 2**j for j in range(7)]
        gaps = [abs(modified_energy(w, SolverParams(t, 32)).e1_total - classical_energy(w, 1.0)) for t in taus]
        assert fitted_slope(taus, gaps) >= 0.9


class TestCertificate:
    def test_fixed_point(self, grid32):
        w = band_field(32, 1, 3)
        c = certify_step(w, w, SolverParams(1e-3, 32))
        assert c.lhs == 0 and c.rhs == 0 and c.satisfied

    def test_small_data(self, grid32):
        p = SolverParams(1e-3, 32)
        w = cos_x1(grid32, a=1e-3)
        c = certify_step(w, step_composed(w, p), p)
        assert c.satisfied and c.rhs >= 0 and c.increment_l2 >= 0

    def test_indeterminate_when_undefined(self, grid32):
        rng = np.random.default_rng(1)
        v = rng.standard_normal((32, 32))
        w = RealField(grid32, v - v.mean())
        c = certify_step(w, cos_x1(grid32), SolverParams(1.0, 32))
        assert c.satisfied is None and math.isnan(c.lhs)

    @given(seeds, bands, st.sampled_from([1e-4, 1e-3, 1e-2]))
    def test_split_step_pairs(self, seed, band, tau):
        p = SolverParams(tau, 32)
        w = step_linear(band_field(32, seed, band, 2.0), p)
        assert certify_step(w, step_composed(w, p), p).satisfied


class TestPotentialBounds:
    def test_well(self, grid32):
        r = potential_bounds(RealField(grid32, np.ones((32, 32))))
        assert r.e_p == 0 and r.f_l43 == 0 and r.ratio_f == 0

    def test_zero(self, grid32):
        r = potential_bounds(RealField.zeros(grid32))
        assert r.e_p == pytest.approx(PI2) and r.l4 == 0 and r.ratio_l4 == 0

    def test_bounded_over_draws(self):
        g = Grid2D(16)
        rng = np.random.default_rng(2024)
        worst_l4 = worst_f = 0.0
        for i in range(1000):
            f = random_field(g, i, int(rng.integers(1, 7)), 1.0)
            v = f.values * rng.uniform(0.0, 3.0) / np.abs(f.values).max() + rng.uniform(-1, 1)
            r = potential_bounds(RealField(g, v))
            worst_l4, worst_f = max(worst_l4, r.ratio_l4), max(worst_f, r.ratio_f)
        assert worst_l4 < 5 and worst_f < 10


class TestThreshold:
    def test_formula_oracle(self):
        g, a, tau = Grid2D(32), 0.1, 1e-3
        est = threshold(cos_x1(g, a=a), SolverParams(tau, 32), Constants(), probe_steps=20)
        # u1 = S_L S_N u0 by hand: modes cos x1 and cos 3x1
        b1 = math.exp(-tau) * (a + tau * (a - 0.75 * a**3))
        b3 = -math.exp(-81 * tau) * 2.25 * tau * a**3
        quad = sum(math.expm1(tau * k**4) / (2 * tau * k**2) * b**2 * 2 * PI2 for k, b in ((1, b1), (3, b3)))
        x = np.linspace(-math.pi, math.pi, 4096, endpoint=False)
        u1 = b1 * np.cos(x) + b3 * np.cos(3 * x)
        pot = 2 * math.pi * (2 * math.pi / 4096) * np.sum(0.25 * (u1**2 - 1) ** 2)
        e1 = quad + pot
        h1 = math.sqrt(2 * a**2 * 2 * PI2)
        q = e1**0.25
        alpha = max(1 + q, math.sqrt(e1) * (1 + q), 2 * (h1 + h1**3))
        assert est.e1_u1 == pytest.approx(e1, rel=1e-12)
        assert est.alpha == pytest.approx(alpha, rel=1e-12)
        assert est.tau_star_formula == pytest.approx(min(alpha**-8, alpha ** (-8 / 3)), rel=1e-11)

    def test_formula_monotone_in_h1(self):
        g = Grid2D(32)
        p = SolverParams(1e-3, 32)
        lo = threshold(random_field(g, 4, 3, 1.0), p, probe_steps=5)
        hi = threshold(random_field(g, 4, 3, 2.0), p, probe_steps=5)
        assert hi.alpha > lo.alpha and hi.tau_star_formula < lo.tau_star_formula

    @given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0.1, 4))
    def test_alpha_monotone(self, e1, h1, nu):
        k = Constants()
        assert alpha_value(e1, 2 * h1, nu, k) >= alpha_value(e1, h1, nu, k)
        a = alpha_value(e1, h1, nu, k)
        assert tau_star_formula(2 * a, nu) < tau_star_formula(a, nu)

    def test_empirical_above_formula_when_calibrated(self):
        g = Grid2D(32)
        p = SolverParams(1e-3, 32)
        k = calibrate_constants(random_corpus(g, 20, 0, 4, 1.0), p)
        assert all(isinstance(getattr(k, f), float) for f in ("c1", "c0_1", "c0_2"))
        u0 = modes_field(g, ((1, 0, 2.0, 0), (0, 2, 1.2, 0), (2, 1, 0.8, 0)))
        est = threshold(u0, p, k, probe_steps=100)
        assert not est.empirical_at_bracket_top
        assert est.tau_star_empirical >= est.tau_star_formula

    def test_constants_positive(self):
        with pytest.raises(ValueError):
            Constants(c1=0.0)


class TestSymbolInequality:
    @pytest.mark.parametrize("n", [32, 128])
    @pytest.mark.parametrize("tau", [1e-6, 1e-3, 0.1, 10.0])
    @pytest.mark.parametrize("nu", [0.05, 1.0, 4.0])
    def test_holds(self, n, tau, nu):
        holds, margin = symbol_inequality(Grid2D(n), tau, nu)
        assert holds and margin >= 0


def test_uniform_linf_bound_shape():
    assert uniform_linf_bound(2.0, 1e-3, 1.0) == pytest.approx(2 * 1e-3**-0.125 + 2 * 1e-3 * 1e-3**-0.875)
