import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pamlab.stats import (
    PHI_GRID,
    Z_GRID,
    _kernel_matrix,
    bandwidth_sensitivity,
    distance_entry,
    fit_rate,
    kde_density,
    kolmogorov_distance,
    silverman_bandwidth,
    sup_distance_to_phi,
    tv_distance_estimate,
)


@pytest.fixture(scope="module")
def big_normal():
    return np.random.default_rng(2024).standard_normal(1_000_000)


class TestKDE:
    def test_grid(self):
        assert Z_GRID.size == 1001 and Z_GRID[0] == -5.0 and Z_GRID[-1] == 5.0
        assert np.allclose(np.diff(Z_GRID), 0.01)

    def test_million_normals(self, big_normal):
        f = kde_density(big_normal)
        assert sup_distance_to_phi(f)[0] <= 0.01
        assert 0.995 <= np.trapezoid(f, Z_GRID) <= 1.0

    def test_truncated_sum_matches_full(self):
        x = np.random.default_rng(0).standard_normal(3000)
        bw = silverman_bandwidth(x)
        full = _kernel_matrix(x, bw).mean(axis=0)
        assert np.allclose(kde_density(x, bw), full, rtol=0, atol=1e-14)

    def test_wide_bandwidth_path(self):
        x = np.random.default_rng(0).standard_normal(500)
        full = _kernel_matrix(x, 4.0).mean(axis=0)
        assert np.allclose(kde_density(x, 4.0), full, rtol=1e-13, atol=0)

    def test_bandwidth_rule(self):
        x = np.random.default_rng(1).standard_normal(1000)
        iqr = np.subtract(*np.percentile(x, [75, 25]))
        expect = 0.9 * min(np.std(x, ddof=1), iqr / 1.34) * 1000 ** -0.2
        assert silverman_bandwidth(x) == pytest.approx(expect, rel=1e-14)

    def test_errors(self):
        with pytest.raises(ValueError):
            kde_density([1.0])
        with pytest.raises(ValueError):
            kde_density(np.zeros(500))
        with pytest.raises(ValueError):
            kde_density(np.arange(50.0))

    def test_shift_equivariance(self):
        x = np.random.default_rng(3).standard_normal(2000) * 0.7
        bw = 0.2
        a = kde_density(x, bw)
        b = kde_density(x + 0.5, bw)
        # kde(x + c)(z) = kde(x)(z - c); c = 50 grid steps
        assert np.allclose(b[50:], a[:-50], rtol=0, atol=1e-13)

    def test_nonnegative(self):
        x = np.random.default_rng(4).standard_cauchy(1000)
        assert np.all(kde_density(x) >= 0)


class TestDistances:
    def test_phi_is_zero(self):
        assert sup_distance_to_phi(PHI_GRID)[0] == 0.0
        assert tv_distance_estimate(PHI_GRID) == 0.0

    def test_shifted_normal(self):
        # oracle: bounded scalar maximisation of |phi(z - 0.5) - phi(z)| gives
        # 0.118501276 at z = -0.7605; the grid maximum sits at z = -0.76
        sup, arg = sup_distance_to_phi(stats.norm.pdf(Z_GRID, 0.5))
        assert sup == pytest.approx(0.1185012, abs=2e-7)
        assert arg == pytest.approx(-0.76)
        # closed form 2 Phi(0.25) - 1; the trapezoid rule adds O(step^2)
        assert tv_distance_estimate(stats.norm.pdf(Z_GRID, 0.5)) == pytest.approx(0.19741265, abs=1e-5)

    def test_scaled_normal(self):
        # oracle: maximum at z = 0, phi(0) (1 - 1/1.2)
        sup, arg = sup_distance_to_phi(stats.norm.pdf(Z_GRID, 0, 1.2))
        assert sup == pytest.approx(0.06649038006690544, rel=1e-12)
        assert arg == 0.0

    def test_far_box_tv(self):
        f = np.where((Z_GRID > 4.5) & (Z_GRID <= 5.0), 2.0, 0.0)
        assert tv_distance_estimate(f) == pytest.approx(1.0, abs=2e-2)
        assert tv_distance_estimate(100 * f) == 1.0

    def test_kolmogorov_quantile_sample(self):
        n = 400
        x = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        assert kolmogorov_distance(x) == pytest.approx(0.5 / n, rel=1e-9)

    def test_kolmogorov_degenerate(self):
        assert kolmogorov_distance(np.zeros(10)) == 0.5
        with pytest.raises(ValueError):
            kolmogorov_distance([0.3])

    def test_kolmogorov_million(self, big_normal):
        assert kolmogorov_distance(big_normal) <= 0.002

    def test_kolmogorov_matches_scipy(self):
        x = np.random.default_rng(5).normal(0.1, 1.0, 777)
        assert kolmogorov_distance(x) == pytest.approx(stats.kstest(x, "norm").statistic, rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(300)
        y = rng.permutation(x)
        fx, fy = kde_density(x), kde_density(y)
        assert sup_distance_to_phi(fx)[0] == pytest.approx(sup_distance_to_phi(fy)[0], abs=1e-14)
        assert tv_distance_estimate(fx) == pytest.approx(tv_distance_estimate(fy), abs=1e-14)
        assert kolmogorov_distance(x) == kolmogorov_distance(y)


class TestFitRate:
    def test_exact_power_law(self):
        R = np.array([1.0, 2.0, 4.0, 8.0])
        fit = fit_rate(list(zip(R, 3.0 * R**-0.25)))
        assert fit.slope == pytest.approx(-0.25, abs=1e-14)
        assert fit.stderr == pytest.approx(0.0, abs=1e-14)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-14)
        assert fit.n_points == 4

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_rate([(1.0, 0.5), (2.0, 0.4)])
        with pytest.raises(ValueError):
            fit_rate([(1.0, 0.5), (2.0, 0.0), (4.0, 0.3)])

    def test_matches_polyfit(self):
        rng = np.random.default_rng(9)
        R = 2.0 ** np.arange(6)
        d = 0.7 * R**-0.4 * np.exp(0.1 * rng.standard_normal(6))
        fit = fit_rate(list(zip(R, d)))
        (slope, icpt), cov = np.polyfit(np.log(R), np.log(d), 1, cov="unscaled")
        resid = np.log(d) - icpt - slope * np.log(R)
        assert fit.slope == pytest.approx(slope, rel=1e-12)
        assert fit.stderr == pytest.approx(math.sqrt(cov[0, 0] * resid @ resid / 4), rel=1e-10)

    def test_noisy_power_law_coverage(self):
        R = 2.0 ** np.arange(6)
        hits = 0
        for seed in range(400):
            noise = 1.0 + 0.05 * np.random.default_rng(seed).standard_normal(6)
            hits += abs(fit_rate(list(zip(R, R**-0.25 * noise))).slope + 0.25) <= 0.08
        assert hits / 400 >= 0.95


class TestBootstrap:
    def test_entry_fields(self):
        F = np.random.default_rng(6).standard_normal(1000)
        e = distance_entry(2.0, F, n_boot=100, seed=1)
        assert e.n == 1000 and e.R == 2.0
        for val, (lo, hi) in [(e.sup_dist, e.sup_ci), (e.tv, e.tv_ci), (e.kolmogorov, e.kolmogorov_ci)]:
            assert 0 <= lo <= hi and val >= 0
        assert 0 <= e.tv <= 1 and 0 <= e.kolmogorov <= 1

    def test_deterministic(self):
        F = np.random.default_rng(6).standard_normal(500)
        a = distance_entry(1.0, F, n_boot=60, seed=np.random.SeedSequence(4))
        b = distance_entry(1.0, F, n_boot=60, seed=np.random.SeedSequence(4))
        assert a == b

    def test_ci_shrinks_at_root_n(self):
        x = stats.norm.rvs(loc=0.3, size=8000, random_state=np.random.default_rng(8))
        w1 = distance_entry(1.0, x[:2000], n_boot=300, seed=1).kolmogorov_ci
        w2 = distance_entry(1.0, x, n_boot=300, seed=1).kolmogorov_ci
        ratio = (w1[1] - w1[0]) / (w2[1] - w2[0])
        assert 1.0 <= ratio <= 4.0  # sqrt(4) = 2 within a factor 2

    def test_bandwidth_table(self):
        F = np.random.default_rng(7).standard_normal(100_000)
        rows = bandwidth_sensitivity(F)
        assert [r["factor"] for r in rows] == [0.5, 0.75, 1.0, 1.5, 2.0]
        bw = silverman_bandwidth(F)
        assert rows[2]["bandwidth"] == bw
        # over-smoothing a normal sample inflates the sup distance
        assert rows[-1]["sup_dist"] > rows[2]["sup_dist"]
