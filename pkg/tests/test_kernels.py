import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pamlab.kernels import (
    DomainError,
    ModelParams,
    box_pair_integral,
    heat_kernel,
    heat_riesz,
    heat_riesz_time_integral,
    kbeta,
    kbeta_closed_form,
    kbeta_qmc,
    riesz_cell_integral,
    riesz_cell_integral_2d,
    riesz_cell_table,
    riesz_fourier_constant,
    sinc2_riesz_integral,
    sinc2_riesz_limit,
)

BETAS = [0.1, 0.25, 0.5, 0.75, 0.9]


def test_model_params_validation():
    ModelParams(1, 0.5, 0.25)
    with pytest.raises(DomainError):
        ModelParams(1, 1.0, 0.25)
    with pytest.raises(DomainError):
        ModelParams(2, 2.0, 0.25)
    with pytest.raises(DomainError):
        ModelParams(1, 0.5, 0.0)


class TestHeatKernel:
    def test_values(self):
        assert heat_kernel(1.0, 0.0) == pytest.approx(0.3989422804, abs=1e-10)
        # (4 pi)^-1 exp(-1/4)
        assert heat_kernel(2.0, np.array([1.0, 0.0]), d=2) == pytest.approx(0.0619749972, rel=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            heat_kernel(0.0, 1.0)

    @given(st.floats(1e-3, 10.0), st.floats(-5.0, 5.0))
    def test_even(self, tau, x):
        assert heat_kernel(tau, x) == heat_kernel(tau, -x)

    def test_mass_and_semigroup(self):
        mass, _ = integrate.quad(lambda x: heat_kernel(0.3, x), -np.inf, np.inf)
        assert mass == pytest.approx(1.0, abs=1e-10)
        for s, r in [(0.1, 0.2), (0.5, 1.5), (1e-2, 2.0)]:
            for x in (0.0, 0.7, -1.9):
                conv, _ = integrate.quad(lambda y: heat_kernel(s, x - y) * heat_kernel(r, y),
                                         -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
                assert conv == pytest.approx(heat_kernel(s + r, x), abs=1e-8)


class TestHeatRiesz:
    @pytest.mark.parametrize("x,v", [(0.0, 1.0), (1.0, 0.3), (3.0, 1e-2), (0.2, 50.0)])
    def test_against_quadrature(self, x, v):
        beta = 0.5
        f = lambda y: heat_kernel(v, x - y)
        lo, _ = integrate.quad(lambda y: f(-y), 0, 60 * math.sqrt(v) + abs(x), weight="alg", wvar=(-beta, 0))
        hi, _ = integrate.quad(f, 0, 60 * math.sqrt(v) + abs(x), weight="alg", wvar=(-beta, 0),
                               limit=200)
        assert heat_riesz(x, v, beta) == pytest.approx(lo + hi, rel=1e-9)

    def test_small_variance_limit(self):
        assert heat_riesz(2.0, 1e-12, 0.5) == pytest.approx(2.0 ** -0.5, rel=1e-9)

    def test_two_dimensional_radial(self):
        # E|x + sqrt(v) Z|^-beta in 2-d by polar quadrature
        beta, v, x = 1.0, 0.5, np.array([0.6, 0.0])
        f = lambda r, th: (r ** (1 - beta) * math.exp(-((r * math.cos(th) - x[0]) ** 2 + (r * math.sin(th)) ** 2)
                                                     / (2 * v)) / (2 * math.pi * v))
        ref, _ = integrate.dblquad(f, 0, 2 * math.pi, 0, 12)
        assert heat_riesz(x, v, beta, d=2) == pytest.approx(ref, rel=1e-7)


class TestRieszCell:
    def test_values(self):
        # oracle: nested adaptive quadrature of the double integral
        assert riesz_cell_integral(0.0, 1.0, 0.5) == pytest.approx(2.666666666666667, rel=1e-12)
        assert riesz_cell_integral(1.0, 1.0, 0.5) == pytest.approx(1.1045694996615871, rel=1e-10)
        assert riesz_cell_integral(2.0, 1.0, 0.5) == pytest.approx(0.7190642309523357, rel=1e-10)
        assert riesz_cell_integral(0.0, 1.0, 0.25) == pytest.approx(1.523809523809525, rel=1e-12)
        assert riesz_cell_integral(3.0, 1.0, 0.75) == pytest.approx(0.44423808570517614, rel=1e-10)

    def test_far_field(self):
        assert riesz_cell_integral(2.0, 1.0, 0.5) > 2.0 ** -0.5

    def test_small_beta(self):
        assert riesz_cell_integral(0.0, 1.0, 1e-10) == pytest.approx(1.0, rel=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            riesz_cell_integral(0.0, 1.0, 1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(1e-3, 2.0))
    def test_table_positive_decreasing(self, beta, h):
        tab = riesz_cell_table(40, h, beta)
        e = tab.entries
        assert np.all(np.isfinite(e)) and np.all(e > 0)
        assert np.all(np.diff(e) < 0)
        assert tab[-3] == tab[3]

    @pytest.mark.parametrize("beta", BETAS)
    def test_tiling_sums_to_kbeta(self, beta):
        n = 32
        h = 2.0 / n
        row = riesz_cell_integral(np.arange(n) * h, h, beta)
        total = n * row[0] + 2 * np.sum((n - np.arange(1, n)) * row[1:])
        assert total == pytest.approx(kbeta_closed_form(beta), rel=1e-10)

    def test_two_dimensional_cells_sum_to_kbeta(self):
        beta, n = 1.0, 4
        h = 2.0 / n
        total = 0.0
        for i in range(-(n - 1), n):
            for j in range(-(n - 1), n):
                total += (n - abs(i)) * (n - abs(j)) * riesz_cell_integral_2d((i, j), h, beta, n=32)
        assert total == pytest.approx(kbeta(2, beta), rel=1e-7)


class TestKbeta:
    def test_values(self):
        assert kbeta(1, 0.5) == pytest.approx(7.5424723, abs=5e-8)
        assert kbeta(1, 0.75) == pytest.approx(15.22185, abs=5e-6)
        assert kbeta_closed_form(1e-12) == pytest.approx(4.0, rel=1e-10)

    @pytest.mark.parametrize("beta", BETAS)
    def test_quadrature_matches_closed_form(self, beta):
        assert abs(kbeta(1, beta) - kbeta_closed_form(beta)) <= 1e-8

    @pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
    def test_qmc_oracle_one_dimension(self, beta):
        val, se = kbeta_qmc(1, beta)
        assert abs(val - kbeta_closed_form(beta)) <= 5 * se

    @pytest.mark.parametrize("beta", [0.5, 1.0, 1.5])
    def test_qmc_oracle_two_dimensions(self, beta):
        val, se = kbeta_qmc(2, beta)
        assert se < 1e-3 * val
        assert abs(val - kbeta(2, beta)) <= 5 * se

    @pytest.mark.parametrize("d,beta", [(1, 0.0), (1, 1.0), (2, 2.0), (1, -0.1)])
    def test_domain(self, d, beta):
        with pytest.raises(DomainError):
            kbeta(d, beta)

    def test_box_pair_route(self):
        for beta in (0.25, 0.5):
            val = box_pair_integral(1.0, 1, lambda r: r ** -beta, singular_exponent=beta)
            assert val == pytest.approx(kbeta_closed_form(beta), rel=1e-12)


class TestFourier:
    def test_constant_values(self):
        assert riesz_fourier_constant(1, 0.5) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-14)
        assert riesz_fourier_constant(2, 1.0) == pytest.approx(2 * math.pi, rel=1e-14)
        with pytest.raises(DomainError):
            riesz_fourier_constant(1, 1.0)

    @pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
    def test_inverse_transform_recovers_riesz(self, x):
        beta = 0.5
        c = riesz_fourier_constant(1, beta)
        head, _ = integrate.quad(lambda s: math.cos(s * x), 0, 1, weight="alg", wvar=(beta - 1, 0))
        tail, _ = integrate.quad(lambda s: s ** (beta - 1), 1, np.inf, weight="cos", wvar=x)
        assert c * (head + tail) / math.pi == pytest.approx(x ** -beta, abs=1e-4)

    @pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
    def test_sinc_integral_limit(self, beta):
        assert sinc2_riesz_integral(beta, 1, "one") == pytest.approx(sinc2_riesz_limit(beta), rel=1e-8)

    def test_sinc_profiles(self):
        beta = 0.5
        J0 = sinc2_riesz_limit(beta)
        assert J0 == pytest.approx(4.72654360241471, rel=1e-10)
        assert sinc2_riesz_integral(beta, 1, "exp", 1e-12) == pytest.approx(J0, rel=1e-8)
        assert sinc2_riesz_integral(beta, 1, "g", 1e-12) == pytest.approx(J0, rel=1e-8)
        assert sinc2_riesz_integral(beta, 1, "exp", 1.0) < sinc2_riesz_integral(beta, 1, "g", 1.0) < J0

    def test_fourier_and_real_space_agree(self):
        # the exp-profile integral is the Fourier side of int_{Q_1^2} E|x1 - x2 + sqrt(v) Z|^-beta
        beta, v = 0.5, 0.3
        c = riesz_fourier_constant(1, beta)
        four = c * 4 * sinc2_riesz_integral(beta, 1, "exp", v / 2) / (2 * math.pi)
        real = box_pair_integral(1.0, 1, lambda r: heat_riesz(r, v, beta))
        assert four == pytest.approx(real, rel=1e-9)

    def test_time_integral(self):
        beta, T, r = 0.5, 0.25, 0.4
        ref, _ = integrate.quad(lambda s: heat_riesz(r, 2 * s, beta), 0, T, epsabs=0, epsrel=1e-12)
        assert heat_riesz_time_integral(np.array([r]), T, beta, 1)[0] == pytest.approx(ref, rel=1e-9)

    def test_two_dimensional_fourier_route_rejected(self):
        with pytest.raises(DomainError):
            sinc2_riesz_integral(1.0, 2)
