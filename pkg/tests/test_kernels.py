import math

import numpy as np
import pytest

from chsplit.harness import random_corpus
from chsplit.kernels import (
    build_kernel,
    evaluate_kernel,
    kernel_norm_sweep,
    min_grid_size,
    periodic_convolution,
    periodized_kernel,
    predicted_exponent,
    smoothing_ratio,
    smoothing_sweep,
)
from chsplit.propagators import SolverParams, step_linear
from chsplit.spectral import AREA, Grid2D, MeanZeroError, RealField, lp_norm

from conftest import band_field, cos_x1

BETAS = [2.0**-j for j in range(4, 15)]
TAUS = [10.0**-j for j in range(1, 7)]


@pytest.mark.parametrize("p,expected", [(math.inf, -0.5), (2.0, -0.25), (1.0, 0.0)])
def test_exponent_fits(p, expected):
    res = kernel_norm_sweep("K_tilde", p, BETAS)
    assert res[0].predicted_exponent == expected
    assert abs(res[0].fitted_exponent - expected) <= 0.05
    assert all(r.norm_value >= 0 for r in res)


def test_predicted_exponent_range():
    for p in (1.0, 4.0 / 3.0, 2.0, 4.0, math.inf):
        assert -0.5 <= predicted_exponent(p) <= 0.0


@pytest.mark.parametrize("beta", [1.0, 2.0**-6, 2.0**-12])
def test_zero_mode_gap(beta):
    n = min_grid_size(beta)
    K, Kt = build_kernel(beta, "K", n), build_kernel(beta, "K_tilde", n)
    assert np.abs(K.values - Kt.values - 1.0 / AREA).max() <= 1e-12
    assert K.grid.weight * K.values.sum() == pytest.approx(1.0, rel=1e-13)


def test_resolution_guard_names_minimum():
    n = min_grid_size(2.0**-10)
    with pytest.raises(ValueError, match=f"need n >= {n}"):
        build_kernel(2.0**-10, "K", n - 2)
    build_kernel(2.0**-10, "K", n)
    with pytest.raises(ValueError):
        build_kernel(0.0, "K", 64)


POINTS = np.array([[0.0, 0.0], [0.3, -0.2], [1.0, 2.0], [-2.5, 0.7], [math.pi, math.pi]])


@pytest.mark.parametrize("beta", [1.0, 0.1])
def test_poisson_summation(beta):
    periodic = periodized_kernel(POINTS, beta)
    spectral = evaluate_kernel(POINTS, beta, "K")
    assert np.abs(periodic - spectral).max() <= 1e-6


def test_pointwise_matches_nodal():
    g = Grid2D(32)
    K = build_kernel(0.05, "K_tilde", 32)
    x1, x2 = g.mesh()
    pts = np.column_stack([x1[::5, ::7].ravel(), x2[::5, ::7].ravel()])
    assert np.allclose(evaluate_kernel(pts, 0.05, "K_tilde"), K.values[::5, ::7].ravel(), atol=1e-13)


@pytest.mark.parametrize("beta", [2.0**-4, 2.0**-10])
def test_holder(beta):
    Kt = build_kernel(beta, "K_tilde", 128)
    one = lp_norm(Kt, 1)
    for p in (2.0, math.inf):
        inv = 0.0 if p == math.inf else 1.0 / p
        assert one <= AREA ** (1 - inv) * lp_norm(Kt, p)


def test_heat_step_is_kernel_convolution():
    n, tau = 16, 0.05
    w = band_field(n, 9, 4)
    assert min_grid_size(tau) <= n
    K = build_kernel(tau, "K", n)
    conv = periodic_convolution(w, K)
    direct = step_linear(w, SolverParams(tau, n))
    assert np.abs(conv.values - direct.values).max() <= 1e-11 * np.abs(direct.values).max()


class TestSmoothing:
    def test_cos_x1_closed_form(self, grid32):
        g = cos_x1(grid32)
        l4 = (1.5 * math.pi**2) ** 0.25
        for tau in TAUS:
            r = smoothing_ratio(g, 1.0, tau)
            assert r == pytest.approx(math.exp(-tau) * tau**0.125 / l4, rel=1e-12)

    def test_mean_zero_required(self, grid32):
        g = RealField.from_function(grid32, lambda x1, x2: 1 + np.cos(x1))
        with pytest.raises(MeanZeroError):
            smoothing_ratio(g, 1.0, 0.1)
        assert smoothing_ratio(g, 1.0, 0.1, "Laplacian_Linf_from_L43") > 0

    def test_zero_rejected(self, grid32):
        with pytest.raises(ValueError):
            smoothing_ratio(RealField.zeros(grid32), 1.0, 0.1, "Laplacian_Linf_from_L43")

    @pytest.mark.parametrize("which", ["Linf_from_L4", "Laplacian_Linf_from_L43"])
    def test_corpus_bounded(self, which):
        corpus = random_corpus(Grid2D(32), 50, 0, 6)
        R = smoothing_sweep(corpus, 1.0, TAUS, which)
        assert np.all(np.isfinite(R)) and R.max() < 1.0
