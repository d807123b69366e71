import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import qmc

from pamlab.averaging import (
    AverageSamples,
    box_cells,
    center_and_scale,
    chaos1_variance,
    chaos1_variance_realspace,
    scheme_variance,
    spatial_integral,
    variance_limit,
    variance_with_se,
)
from pamlab.kernels import DomainError, ModelParams, heat_riesz, kbeta
from pamlab.noise import NoiseGrid
from pamlab.solver import ConfigError, SolverConfig


@pytest.fixture
def grid():
    return NoiseGrid(256, 0.05, 1e-3)


class TestSpatialIntegral:
    def test_ones(self, grid):
        assert spatial_integral(np.ones(256), grid, 2.0) == pytest.approx(4.0, rel=1e-14)

    def test_batch_and_linear(self, grid):
        x = grid.centers
        v = np.stack([np.ones(256), 1.0 + x, 3.0 * x**2])
        out = spatial_integral(v, grid, 1.0)
        # midpoint rule is exact for affine integrands; x^2 has error h^2 R / 6 * 2
        assert out[0] == pytest.approx(2.0, rel=1e-14)
        assert out[1] == pytest.approx(2.0, rel=1e-13)
        assert out[2] == pytest.approx(2.0 - 0.05**2 / 4 * 2, rel=1e-12)

    def test_box_must_align(self, grid):
        with pytest.raises(ConfigError):
            box_cells(grid, 0.123)
        with pytest.raises(ConfigError):
            box_cells(grid, 7.0)

    def test_cells(self, grid):
        sl = box_cells(grid, 2.0)
        assert sl.stop - sl.start == 80
        assert grid.centers[sl.start] == pytest.approx(-1.975)


class TestCenterAndScale:
    def test_empirical_mode_standardises(self):
        rng = np.random.default_rng(0)
        s = AverageSamples(1.0, 2.0 + 3.0 * rng.standard_normal(500), ModelParams(1, 0.5, 1.0))
        F = center_and_scale(s)
        assert np.std(F, ddof=1) == pytest.approx(1.0, rel=1e-12)
        assert np.allclose(F * np.std(s.raw, ddof=1) + 2.0, s.raw)

    def test_limit_mode(self):
        s = AverageSamples(1.0, [2.0 + math.sqrt(7.5424723), 2.0], ModelParams(1, 0.5, 1.0))
        F = center_and_scale(s, "limit")
        assert F[0] == pytest.approx(1.0, rel=1e-8) and F[1] == 0.0

    def test_chaos1_mode(self):
        p = ModelParams(1, 0.5, 0.25)
        s = AverageSamples(2.0, [5.0, 3.0], p)
        F = center_and_scale(s, "chaos1")
        assert F[0] == pytest.approx(1.0 / math.sqrt(chaos1_variance(2.0, 0.25, p)), rel=1e-12)

    def test_errors(self):
        p = ModelParams(1, 0.5, 0.25)
        with pytest.raises(ValueError):
            center_and_scale(AverageSamples(1.0, [2.0, 2.0], p))
        with pytest.raises(ValueError):
            center_and_scale(AverageSamples(1.0, [1.0, 2.0], p), "median")
        with pytest.raises(ValueError):
            AverageSamples(1.0, [1.0], p)
        with pytest.raises(ValueError):
            AverageSamples(1.0, [1.0, np.nan], p)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 10))
    def test_scale_invariance(self, scale):
        rng = np.random.default_rng(3)
        p = ModelParams(1, 0.5, 0.25)
        z = rng.standard_normal(50)
        a = center_and_scale(AverageSamples(1.0, 2.0 + z, p))
        b = center_and_scale(AverageSamples(1.0, 2.0 + scale * z, p))
        assert np.allclose(a, b, atol=1e-10)


class TestVariance:
    def test_limit_values(self):
        p = ModelParams(1, 0.5, 1.0)
        assert variance_limit(1.0, 1.0, p) == pytest.approx(7.5424723, abs=5e-8)
        assert variance_limit(4.0, 0.25, p) == pytest.approx(kbeta(1, 0.5) * 0.25 * 8.0, rel=1e-14)
        assert variance_limit(3.0, 0.0, p) == 0.0
        with pytest.raises(DomainError):
            variance_limit(1.0, -1.0, p)

    @pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
    def test_chaos1_small_time_limit(self, beta):
        p = ModelParams(1, beta, 1e-4)
        r = chaos1_variance(2.0, 1e-4, p) / variance_limit(2.0, 1e-4, p)
        assert r == pytest.approx(1.0, abs=2e-3)

    def test_chaos1_zero_time(self):
        assert chaos1_variance(2.0, 0.0, ModelParams(1, 0.5, 0.25)) == 0.0

    @pytest.mark.parametrize("R,t", [(1.0, 0.25), (2.0, 1.0), (4.0, 0.1)])
    def test_chaos1_against_qmc(self, R, t):
        # E over X1, X2 ~ U(Q_R), s ~ U(0, t) of E|X1 - X2 + sqrt(2(t - s)) Z|^-beta
        beta = 0.5
        n, reps = 2**14, 8
        est = []
        for k in range(reps):
            u = qmc.Sobol(3, scramble=True, seed=100 + k, bits=64).random(n)
            x = 2 * R * (u[:, 0] - u[:, 1])
            s = t * u[:, 2]
            est.append(np.mean(heat_riesz(x, 2 * (t - s), beta)) * (2 * R) ** 2 * t)
        est = np.asarray(est)
        se = est.std(ddof=1) / math.sqrt(reps)
        val = chaos1_variance(R, t, ModelParams(1, beta, t))
        assert se < 5e-3 * val
        assert abs(est.mean() - val) <= max(5 * se, 5e-3 * val)

    @pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
    def test_fourier_and_real_space_agree(self, beta):
        for R, t in [(1.0, 0.25), (8.0, 0.25), (2.0, 2.0)]:
            p = ModelParams(1, beta, t)
            assert chaos1_variance(R, t, p) == pytest.approx(chaos1_variance_realspace(R, t, p), rel=1e-9)

    def test_ratio_monotone_in_R(self):
        p = ModelParams(1, 0.5, 0.25)
        Rs = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
        ratio = [chaos1_variance(R, 0.25, p) / variance_limit(R, 0.25, p) for R in Rs]
        assert np.all(np.diff(ratio) > 0) and ratio[-1] < 1.0
        vals = [chaos1_variance(R, 0.25, p) for R in Rs]
        assert np.all(np.diff(vals) > 0)

    def test_two_dimensional_small_time(self):
        p = ModelParams(2, 1.0, 1e-3)
        r = chaos1_variance(1.0, 1e-3, p) / variance_limit(1.0, 1e-3, p)
        assert r == pytest.approx(1.0, abs=0.02) and r < 1.0

    def test_scheme_first_chaos_close_to_continuum(self):
        c = SolverConfig.build(0.25, 0.05, 1e-3, 8.0)
        p = ModelParams(1, 0.5, 0.25)
        first = scheme_variance(c, 0.5, [2.0, 4.0, 8.0], first_chaos=True)
        cont = [chaos1_variance(R, 0.25, p) for R in (2.0, 4.0, 8.0)]
        assert np.allclose(first, cont, rtol=0.02)

    def test_variance_with_se_normal(self):
        x = np.random.default_rng(1).standard_normal(100_000)
        v, se = variance_with_se(x)
        assert se == pytest.approx(math.sqrt(2 / x.size), rel=0.05)
        assert abs(v - 1.0) <= 4 * se


def test_scheme_variance_matches_feynman_kac():
    # continuum oracle: Var(int_{Q_R} u) = E_{x,y,W}[exp(int_0^t |x - y + sqrt(2) W_s|^-beta ds) - 1] (2R)^2
    t, beta, R = 0.25, 0.5, 2.0
    rng = np.random.default_rng(12)
    n, steps = 40_000, 2000
    ds = t / steps
    pos = rng.uniform(-R, R, n) - rng.uniform(-R, R, n)
    acc = np.zeros(n)
    for _ in range(steps):
        inc = math.sqrt(2 * ds) * rng.standard_normal(n)
        acc += np.abs(pos + 0.5 * inc) ** -beta * ds
        pos += inc
    f = np.expm1(acc) * (2 * R) ** 2
    fk, se = f.mean(), f.std() / math.sqrt(n)
    exact = scheme_variance(SolverConfig.build(t, 0.05, 1e-3, R), beta, [R])[0]
    assert abs(fk - exact) <= 3 * se + 0.01 * exact
    # the higher chaoses carry a large share of the variance at this size
    assert fk / chaos1_variance(R, t, ModelParams(1, beta, t)) > 1.2
