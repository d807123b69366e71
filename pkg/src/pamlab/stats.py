"""Distances between the Monte Carlo law of F_{R,t} and N(0, 1), plus log-log rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.stats import norm

Z_GRID = np.round(np.linspace(-5.0, 5.0, 1001), 10)
PHI_GRID = norm.pdf(Z_GRID)


def silverman_bandwidth(x) -> float:
    """``0.9 min(std, IQR / 1.34) n^(-1/5)``."""
    x = np.asarray(x, dtype=float)
    std = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    a = min(std, (q75 - q25) / 1.34)
    if not a > 0:
        a = std
    return 0.9 * a * x.size ** (-0.2)


def _kernel_matrix(x, bandwidth, grid=Z_GRID):
    u = (grid[None, :] - x[:, None]) / bandwidth
    return np.exp(-0.5 * u * u) / (bandwidth * math.sqrt(2.0 * math.pi))


def kde_density(samples, bandwidth: float | None = None, grid=Z_GRID) -> np.ndarray:
    """Gaussian-kernel density estimate on the fixed grid [-5, 5], step 0.01."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2 or not np.ptp(x) > 0:
        raise ValueError("degenerate sample: need at least two distinct values")
    if x.size < 100:
        raise ValueError(f"KDE needs n >= 100 samples, got {x.size}")
    bw = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if grid is not Z_GRID:
        return _kernel_matrix(x, bw, grid).mean(axis=0)
    # each sample only reaches grid points within 9 bandwidths (kernel < 3e-18 beyond)
    step = 0.01
    k = int(math.ceil(9.0 * bw / step))
    if 2 * k + 1 >= grid.size:
        out = np.zeros(grid.size)
        for lo in range(0, x.size, 2048):
            out += _kernel_matrix(x[lo:lo + 2048], bw, grid).sum(axis=0)
        return out / x.size
    offs = np.arange(-k, k + 1)
    out = np.zeros(grid.size + 2 * k)
    chunk = max(1, 2**22 // offs.size)
    for lo in range(0, x.size, chunk):
        xs = x[lo:lo + chunk]
        centre = np.rint((xs - grid[0]) / step).astype(np.int64)
        idx = centre[:, None] + offs[None, :]
        u = (grid[0] + idx * step - xs[:, None]) / bw
        w = np.exp(-0.5 * u * u)
        keep = (idx >= -k) & (idx < grid.size + k)
        out += np.bincount((idx + k)[keep], weights=w[keep], minlength=out.size)
    return out[k:k + grid.size] / (x.size * bw * math.sqrt(2.0 * math.pi))


def sup_distance_to_phi(density, grid=Z_GRID) -> tuple[float, float]:
    """Largest grid deviation ``|f(z) - phi(z)|`` and the z where it occurs."""
    dev = np.abs(np.asarray(density) - norm.pdf(grid))
    i = int(np.argmax(dev))
    return float(dev[i]), float(grid[i])


def tv_distance_estimate(density, grid=Z_GRID) -> float:
    """Half the trapezoid integral of ``|f - phi|`` over the grid, capped at 1."""
    diff = np.abs(np.asarray(density) - norm.pdf(grid))
    return float(min(0.5 * np.trapezoid(diff, grid), 1.0))


def kolmogorov_distance(samples) -> float:
    """``sup_z |F_n(z) - Phi(z)|``, evaluated exactly at the jump points."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise ValueError("need n >= 2")
    cdf = special.ndtr(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float
    n_points: int


def fit_rate(points, weights=None) -> RateFit:
    """Weighted least squares of log(distance) on log(R).

    *points* is a sequence of ``(R, distance)``.  The slope standard error
    comes from the weighted residuals with ``n - 2`` degrees of freedom.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("fit_rate needs at least three (R, distance) points")
    if np.any(pts[:, 1] <= 0) or np.any(pts[:, 0] <= 0):
        raise ValueError("R and distances must be positive for a log-log fit")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    W = w.sum()
    xm, ym = (w * x).sum() / W, (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    resid = y - intercept - slope * x
    dof = x.size - 2
    s2 = (w * resid**2).sum() / dof
    return RateFit(float(slope), float(intercept), float(math.sqrt(s2 / sxx)), x.size)


@dataclass
class DistanceEntry:
    R: float
    n: int
    sup_dist: float
    sup_argmax: float
    tv: float
    kolmogorov: float
    bandwidth: float
    sup_ci: tuple[float, float]
    tv_ci: tuple[float, float]
    kolmogorov_ci: tuple[float, float]


@dataclass
class DistanceReport:
    sigma_mode: str
    entries: list[DistanceEntry] = field(default_factory=list)
    tv_fit: RateFit | None = None
    sup_fit: RateFit | None = None
    kolmogorov_fit: RateFit | None = None


def distance_entry(R: float, F, n_boot: int = 500, seed: int = 0,
                   bandwidth: float | None = None) -> DistanceEntry:
    """All three distances for one R with percentile bootstrap 95% intervals.

    Resamples reuse the full-sample bandwidth, so each bootstrap KDE is a
    reweighting of one fixed kernel matrix.
    """
    F = np.asarray(F, dtype=float)
    n = F.size
    bw = silverman_bandwidth(F) if bandwidth is None else bandwidth
    dens = kde_density(F, bw)
    sup, arg = sup_distance_to_phi(dens)
    tv = tv_distance_estimate(dens)
    ks = kolmogorov_distance(F)

    rng = np.random.default_rng(seed)
    K = _kernel_matrix(F, bw)
    sups, tvs, kss = np.empty(n_boot), np.empty(n_boot), np.empty(n_boot)
    for lo in range(0, n_boot, 50):
        idx = rng.integers(0, n, size=(min(50, n_boot - lo), n))
        counts = np.stack([np.bincount(row, minlength=n) for row in idx]).astype(float)
        D = counts @ K / n
        for j in range(D.shape[0]):
            sups[lo + j] = sup_distance_to_phi(D[j])[0]
            tvs[lo + j] = tv_distance_estimate(D[j])
            kss[lo + j] = kolmogorov_distance(F[idx[j]])

    def ci(a):
        lo_, hi_ = np.percentile(a, [2.5, 97.5])
        return float(lo_), float(hi_)

    return DistanceEntry(R, n, sup, arg, tv, ks, bw, ci(sups), ci(tvs), ci(kss))


def bandwidth_sensitivity(F, factors=(0.5, 0.75, 1.0, 1.5, 2.0)) -> list[dict]:
    """Sup and TV distances when the default bandwidth is scaled by each factor."""
    bw0 = silverman_bandwidth(F)
    rows = []
    for f in factors:
        dens = kde_density(F, bw0 * f)
        rows.append({"factor": f, "bandwidth": bw0 * f,
                     "sup_dist": sup_distance_to_phi(dens)[0],
                     "tv": tv_distance_estimate(dens)})
    return rows
