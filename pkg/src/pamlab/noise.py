"""Space-time noise increments with exact cell-integrated Riesz covariance (d = 1).

One increment is the vector ``W((t_n, t_n + dt] x cell_j)``; its covariance is
``dt * C`` with ``C_jk = int_{cell_j} int_{cell_k} |x - y|^-beta dx dy`` on the
periodic torus ``[-L, L)``, using the nearest periodic image of each offset.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .kernels import DomainError, riesz_cell_integral

log = logging.getLogger(__name__)


class NoiseError(RuntimeError):
    pass


class CholeskyError(NoiseError):
    def __init__(self, message: str, min_pivot: float):
        super().__init__(message)
        self.min_pivot = min_pivot


@dataclass(frozen=True)
class NoiseGrid:
    """Periodic cell grid on [-L, L) with ``n_cells * h = 2L``."""

    n_cells: int
    h: float
    dt: float

    def __post_init__(self):
        n = self.n_cells
        if n < 2 or n & (n - 1):
            raise DomainError(f"n_cells must be a power of two, got {n}")
        if not self.h > 0:
            raise DomainError("cell width must be positive")
        if not self.dt > 0:
            raise DomainError("time step must be positive")

    @property
    def L(self) -> float:
        return 0.5 * self.n_cells * self.h

    @property
    def centers(self) -> np.ndarray:
        return -self.L + (np.arange(self.n_cells) + 0.5) * self.h


def covariance_row(n_cells: int, h: float, beta: float) -> np.ndarray:
    """First row of the periodised cell covariance (nearest image of each offset)."""
    m = np.arange(n_cells)
    m = np.minimum(m, n_cells - m)
    return riesz_cell_integral(m * h, h, beta)


def cell_covariance(grid: NoiseGrid, beta: float) -> np.ndarray:
    """Symmetric circulant matrix C of exact cell-pair Riesz integrals."""
    row = covariance_row(grid.n_cells, grid.h, beta)
    return scipy.linalg.circulant(row)


@lru_cache(maxsize=32)
def circulant_eigenvalues(n_cells: int, h: float, beta: float) -> np.ndarray:
    """Eigenvalues of the periodised covariance, i.e. the FFT of its first row.

    Small negative eigenvalues (above ``-1e-10 * max``) are clamped to zero
    and counted in the log; anything more negative is an error.
    """
    lam = np.fft.rfft(covariance_row(n_cells, h, beta)).real
    top = lam.max()
    neg = lam < 0
    if np.any(lam < -1e-10 * top):
        raise NoiseError(f"circulant embedding not PSD: min eigenvalue {lam.min():.3e} "
                         f"vs max {top:.3e}")
    if np.any(neg):
        log.info("clamped %d slightly negative circulant eigenvalues", int(neg.sum()))
        lam = np.where(neg, 0.0, lam)
    lam.flags.writeable = False
    return lam


def cholesky_factor(C: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Lower Cholesky factor of ``C + jitter * I``.

    On failure raises `CholeskyError` carrying the most negative LDL^T pivot.
    ``jitter`` must not exceed ``1e-12 * trace(C)``.
    """
    if jitter > 1e-12 * np.trace(C):
        raise ValueError("jitter above 1e-12 * trace(C)")
    A = C + jitter * np.eye(C.shape[0]) if jitter else C
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        _, D, _ = scipy.linalg.ldl(A)
        piv = np.min(np.linalg.eigvalsh(D)) if D.size else 0.0
        raise CholeskyError(f"covariance not positive definite; most negative pivot {piv:.3e}",
                            min_pivot=float(piv)) from None


def sample_cholesky(C: np.ndarray, dt: float, rng: np.random.Generator, size=None,
                    factor: np.ndarray | None = None) -> np.ndarray:
    """Exact draw(s) from ``N(0, dt * C)``; the slow oracle sampler.

    *size* adds leading sample axes.  A precomputed *factor* skips the
    decomposition.
    """
    if dt == 0:
        shape = (() if size is None else np.atleast_1d(size).tolist())
        return np.zeros((*shape, C.shape[0]))
    Lf = cholesky_factor(C) if factor is None else factor
    n = C.shape[0]
    shape = (n,) if size is None else (*np.atleast_1d(size).tolist(), n)
    z = rng.standard_normal(shape)
    return np.sqrt(dt) * z @ Lf.T


class CirculantSampler:
    """FFT sampler for the stationary torus covariance.

    Uses one real normal per cell: a Hermitian-symmetric complex vector
    scaled by the square-rooted eigenvalues and sent through ``irfft``.
    """

    def __init__(self, grid: NoiseGrid, beta: float):
        self.grid = grid
        self.beta = beta
        lam = circulant_eigenvalues(grid.n_cells, grid.h, beta)
        n = grid.n_cells
        scale = np.sqrt(lam)
        scale[1:-1] /= np.sqrt(2.0)
        # irfft carries 1/n; the target is n^-1/2 sum_k sqrt(lam_k) zeta_k e^{...}
        self._scale = scale * np.sqrt(n)

    def from_normals(self, z: np.ndarray, dt: float) -> np.ndarray:
        """Map standard normals of shape (..., n_cells) to increments."""
        n = self.grid.n_cells
        half = n // 2
        coef = np.empty((*z.shape[:-1], half + 1), dtype=complex)
        coef[..., 0] = z[..., 0]
        coef[..., half] = z[..., 1]
        coef[..., 1:half] = z[..., 2:half + 1] + 1j * z[..., half + 1:]
        return np.sqrt(dt) * np.fft.irfft(coef * self._scale, n=n, axis=-1)

    def sample(self, dt: float, rng: np.random.Generator, size=None) -> np.ndarray:
        n = self.grid.n_cells
        shape = (n,) if size is None else (*np.atleast_1d(size).tolist(), n)
        return self.from_normals(rng.standard_normal(shape), dt)


def sample_circulant(grid: NoiseGrid, beta: float, dt: float, rng: np.random.Generator,
                     size=None) -> np.ndarray:
    return CirculantSampler(grid, beta).sample(dt, rng, size)


# ---------------------------------------------------------------------------
# binary dumps: 32-byte header (magic, d, n_cells, dt), then little-endian float64

NOISE_MAGIC = b"PAMNOISE"
FIELD_MAGIC = b"PAMFIELD"
_HEADER = struct.Struct("<8sQQd")


def write_increments(path, values: np.ndarray, dt: float, d: int = 1) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(NOISE_MAGIC, d, values.shape[-1], dt))
        fh.write(values.tobytes(order="C"))


def read_increments(path) -> tuple[np.ndarray, dict]:
    raw = Path(path).read_bytes()
    magic, d, n_cells, dt = _HEADER.unpack_from(raw)
    if magic != NOISE_MAGIC:
        raise ValueError(f"not a noise dump: magic {magic!r}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(-1, n_cells)
    return data, {"d": d, "n_cells": n_cells, "dt": dt}


def second_moment_with_se(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Empirical ``E[x_j x_k]`` of centered draws (rows) and its entrywise standard error."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    emp = x.T @ x / n
    sq = (x * x).T @ (x * x) / n
    return emp, np.sqrt(np.maximum(sq - emp * emp, 0.0) / n)


def covariance_error_in_se(samples: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``|empirical - target| / se`` entrywise for centered samples (rows are draws)."""
    emp, se = second_moment_with_se(samples)
    return np.abs(emp - target) / np.where(se > 0, se, np.inf)
