"""Spatial integrals over Q_R, the normalised statistic F_{R,t} and variance oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (
    DomainError,
    ModelParams,
    box_pair_integral,
    heat_riesz_time_integral,
    kbeta,
    riesz_fourier_constant,
    sinc2_riesz_integral,
)
from .noise import NoiseGrid, covariance_row
from .solver import ConfigError, SolverConfig, _resolvent_symbol

SIGMA_MODES = ("empirical", "chaos1", "limit")


@dataclass
class AverageSamples:
    """Replica values of ``int_{Q_R} u(t, x) dx`` for one box half-width R."""

    R: float
    raw: np.ndarray
    params: ModelParams

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=float)
        if self.raw.ndim != 1 or self.raw.size < 2:
            raise ValueError("need at least two replica values")
        if not np.all(np.isfinite(self.raw)):
            raise ValueError("non-finite spatial integral")

    @property
    def t(self) -> float:
        return self.params.t

    @property
    def centered(self) -> np.ndarray:
        return self.raw - (2.0 * self.R) ** self.params.d


def box_cells(grid: NoiseGrid, R: float, margin: float = 0.0) -> slice:
    """Slice of the cells tiling [-R, R]; R must be a multiple of h."""
    m = R / grid.h
    if not math.isclose(m, round(m), rel_tol=0, abs_tol=1e-9) or R <= 0:
        raise ConfigError(f"R={R} is not a positive multiple of h={grid.h}")
    m = int(round(m))
    half = grid.n_cells // 2
    if R + margin > grid.L + 1e-12:
        raise ConfigError(f"Q_R with R={R} plus margin {margin} does not fit in L={grid.L}")
    return slice(half - m, half + m)


def spatial_integral(values, grid: NoiseGrid, R: float, margin: float = 0.0):
    """Midpoint rule ``h * sum u`` over the cells of Q_R (last axis = cells)."""
    v = np.asarray(values)
    return v[..., box_cells(grid, R, margin)].sum(axis=-1) * grid.h


def variance_limit(R: float, t: float, params: ModelParams) -> float:
    """``k_beta t R^(2d - beta)``, the large-R equivalent of Var(int_{Q_R} u)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return kbeta(params.d, params.beta) * t * R ** (2 * params.d - params.beta)


def chaos1_variance(R: float, t: float, params: ModelParams, epsrel: float = 1e-6) -> float:
    """Variance of the first Wiener chaos of ``int_{Q_R} u(t, x) dx``.

    ``(2pi)^-d c_{d,beta} int |1_{Q_R}^(xi)|^2 (1 - e^{-t|xi|^2}) |xi|^(beta-d-2) dxi``.
    With ``eta = R xi`` this is ``(2pi)^-d c 4^d t R^(2d-beta)`` times the
    sinc^2 integral with profile ``(1 - e^{-a q}) / (a q)``, ``a = t / R^2``;
    the profile's series form is used where ``a q`` is small.  For d = 2 the
    equivalent real-space form (`chaos1_variance_realspace`) is used.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    d, beta = params.d, params.beta
    if d == 2:
        return chaos1_variance_realspace(R, t, params)
    c = riesz_fourier_constant(d, beta)
    J = sinc2_riesz_integral(beta, d, "g", t / R**2, epsrel=min(epsrel, 1e-8))
    return (2.0 * math.pi) ** (-d) * c * 4.0**d * t * R ** (2 * d - beta) * J


def chaos1_variance_realspace(R: float, t: float, params: ModelParams) -> float:
    """``int_{Q_R^2} int_0^t E|x1 - x2 + sqrt(2s) Z|^-beta ds dx1 dx2``; Fourier-free twin."""
    d, beta = params.d, params.beta
    return box_pair_integral(R, d, lambda r: heat_riesz_time_integral(r, t, beta, d))


def center_and_scale(samples: AverageSamples, sigma_mode: str = "empirical") -> np.ndarray:
    """``F = (raw - (2R)^d) / sigma`` for the chosen denominator.

    ``empirical`` uses the unbiased sample standard deviation of *raw*,
    ``chaos1`` the first-chaos variance and ``limit`` ``k_beta t R^(2d-beta)``.
    """
    if sigma_mode == "empirical":
        var = float(np.var(samples.raw, ddof=1))
    elif sigma_mode == "chaos1":
        var = chaos1_variance(samples.R, samples.t, samples.params)
    elif sigma_mode == "limit":
        var = variance_limit(samples.R, samples.t, samples.params)
    else:
        raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}, got {sigma_mode!r}")
    if not var > 0:
        raise ValueError(f"zero variance for R={samples.R} in mode {sigma_mode}")
    return samples.centered / math.sqrt(var)


def variance_with_se(x) -> tuple[float, float]:
    """Unbiased sample variance and its standard error ``sqrt((m4 - s^4) / n)``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    v = float(np.var(x, ddof=1))
    m4 = float(np.mean((x - x.mean()) ** 4))
    return v, math.sqrt(max(m4 - v * v, 0.0) / n)


def scheme_second_moment(config: SolverConfig, beta: float, first_chaos: bool = False) -> np.ndarray:
    """Exact ``E[u_N(i) u_N(i + m)]`` of the discrete scheme, indexed by offset m.

    The scheme is stationary on the torus, so the two-point moment obeys the
    closed recursion::

        M <- S^2 * (M (1 + dt C / h^2))

    where ``S`` is the resolvent (a circulant, applied by FFT) and ``C`` the
    cell covariance row.  With ``first_chaos=True`` the factor is replaced by
    the additive term ``M + dt C / h^2``, i.e. only the Gaussian part of u.
    """
    grid = config.grid
    n, h, dt = grid.n_cells, grid.h, grid.dt
    c = covariance_row(n, h, beta) * (dt / h**2)
    sym2 = _resolvent_symbol(grid) ** 2
    m = np.ones(n)
    for _ in range(config.nt):
        m = m + c if first_chaos else m * (1.0 + c)
        m = np.fft.irfft(np.fft.rfft(m) * sym2, n=n)
    return m


def scheme_variance(config: SolverConfig, beta: float, R_values, first_chaos: bool = False) -> np.ndarray:
    """Exact variance of the midpoint integral over Q_R under the discrete scheme.

    ``h^2 sum_{|m| < k} (k - |m|) (M[m] - 1)`` with ``k = 2R/h`` cells.  This
    is the deterministic counterpart of the Monte Carlo variance.
    """
    grid = config.grid
    m = scheme_second_moment(config, beta, first_chaos) - 1.0
    out = []
    for R in np.atleast_1d(R_values):
        sl = box_cells(grid, float(R))
        k = sl.stop - sl.start
        off = np.arange(-(k - 1), k)
        out.append(grid.h**2 * np.sum((k - np.abs(off)) * m[off % grid.n_cells]))
    return np.asarray(out)
