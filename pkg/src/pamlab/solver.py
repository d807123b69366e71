"""Semi-implicit Euler scheme for du = (1/2) u'' dt + u dW on the periodic grid (d = 1).

One step::

    u_{n+1} = (I - dt/2 Lap_h)^-1 (u_n + u_n * dW_n / h)

with the periodic three-point Laplacian diagonalised by the real FFT.  The
noise factor multiplies the left-point value (Ito), which is what the mild
formulation with a Walsh integral requires.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import ModelParams
from .noise import FIELD_MAGIC, CirculantSampler, NoiseGrid, _HEADER
from .rng import StreamFactory

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    def __init__(self, message: str, step: int | None = None, replica: int | None = None):
        super().__init__(message)
        self.step = step
        self.replica = replica


@dataclass(frozen=True)
class SolverConfig:
    grid: NoiseGrid
    nt: int
    r_max: float = 0.0
    scheme: str = "semi-implicit"
    clamp_negative: bool = False

    def __post_init__(self):
        if self.scheme != "semi-implicit":
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.nt < 1:
            raise ConfigError("need at least one time step")
        if self.grid.dt > self.grid.h:
            raise ConfigError(f"dt={self.grid.dt} exceeds the stability envelope dt <= h={self.grid.h}")
        if self.margin < 6.0 * math.sqrt(self.t):
            raise ConfigError(f"margin {self.margin:.4g} below 6*sqrt(t) = {6 * math.sqrt(self.t):.4g}")

    @property
    def t(self) -> float:
        return self.nt * self.grid.dt

    @property
    def margin(self) -> float:
        return self.grid.L - self.r_max

    @classmethod
    def build(cls, t: float, h: float, dt: float, r_max: float, margin: float | None = None,
              **kw) -> "SolverConfig":
        """Smallest power-of-two grid holding Q_{r_max} plus the margin (default 6 sqrt(t))."""
        nt = int(round(t / dt))
        if not math.isclose(nt * dt, t, rel_tol=1e-9):
            raise ConfigError(f"t={t} is not a multiple of dt={dt}")
        margin = 6.0 * math.sqrt(t) if margin is None else margin
        need = 2.0 * (r_max + margin) / h
        n = 1 << max(1, math.ceil(math.log2(need - 1e-9)))
        return cls(NoiseGrid(n, h, dt), nt, r_max, **kw)


@dataclass
class Field:
    """Solution values on the cells at time index ``index`` (leading axes are replicas)."""

    values: np.ndarray
    index: int = 0

    @classmethod
    def initial(cls, grid: NoiseGrid, batch: int | None = None) -> "Field":
        shape = (grid.n_cells,) if batch is None else (batch, grid.n_cells)
        return cls(np.ones(shape), 0)


def _resolvent_symbol(grid: NoiseGrid) -> np.ndarray:
    k = np.arange(grid.n_cells // 2 + 1)
    lap = -4.0 / grid.h**2 * np.sin(np.pi * k / grid.n_cells) ** 2
    return 1.0 / (1.0 - 0.5 * grid.dt * lap)


def _advance(u: np.ndarray, dw: np.ndarray, symbol: np.ndarray, h: float) -> np.ndarray:
    rhs = u + u * dw / h
    return np.fft.irfft(np.fft.rfft(rhs, axis=-1) * symbol, n=u.shape[-1], axis=-1)


def step(field: Field, dw: np.ndarray, config: SolverConfig) -> Field:
    """Advance one time step with noise increment *dw* (same shape as the field)."""
    if dw.shape[-1] != config.grid.n_cells:
        raise ValueError("noise increment does not match the grid")
    u = _advance(field.values, dw, _resolvent_symbol(config.grid), config.grid.h)
    if not np.all(np.isfinite(u)):
        raise NumericalError(f"non-finite field after step {field.index + 1}", step=field.index + 1)
    if config.clamp_negative:
        u = np.maximum(u, 0.0)
    return Field(u, field.index + 1)


def solve_batch(params: ModelParams, config: SolverConfig, master_seed: int, replica_ids,
                zero_noise: bool = False, streams: StreamFactory | None = None) -> np.ndarray:
    """Terminal fields for several replicas, shape (len(replica_ids), n_cells).

    Replica ``r`` uses the stream keyed ``(master_seed, r, step)`` at each
    step, so a replica's result does not depend on which batch it runs in.
    """
    if params.d != 1:
        raise ConfigError("the SPDE solver is implemented for d = 1")
    if not math.isclose(config.t, params.t, rel_tol=1e-9):
        raise ConfigError(f"solver horizon {config.t} does not match params.t={params.t}")
    grid = config.grid
    ids = list(replica_ids)
    u = np.ones((len(ids), grid.n_cells))
    if zero_noise:
        return u
    sampler = CirculantSampler(grid, params.beta)
    symbol = _resolvent_symbol(grid)
    streams = streams or StreamFactory()
    z = np.empty_like(u)
    for n in range(config.nt):
        for i, r in enumerate(ids):
            z[i] = streams(master_seed, r, n).standard_normal(grid.n_cells)
        dw = sampler.from_normals(z, grid.dt)
        u = _advance(u, dw, symbol, grid.h)
        if config.clamp_negative:
            np.maximum(u, 0.0, out=u)
        if not np.all(np.isfinite(u)):
            bad = ids[int(np.argmax(~np.all(np.isfinite(u), axis=1)))]
            raise NumericalError(f"non-finite field at step {n + 1} (replica {bad})",
                                 step=n + 1, replica=bad)
    return u


def solve(params: ModelParams, config: SolverConfig, master_seed: int, replica_id: int = 0,
          zero_noise: bool = False) -> Field:
    """Terminal field of one replica."""
    u = solve_batch(params, config, master_seed, [replica_id], zero_noise=zero_noise)
    return Field(u[0], config.nt)


@dataclass(frozen=True)
class PositivityReport:
    fraction_nonnegative: float
    minimum: float
    n_negative: int
    n_cells: int
    clamped: bool = False


def positivity_report(field, clamped: bool = False) -> PositivityReport:
    """Fraction of nonnegative cell values and the minimum; never modifies the field."""
    v = np.asarray(field.values if isinstance(field, Field) else field)
    neg = int(np.count_nonzero(v < 0))
    return PositivityReport(1.0 - neg / v.size, float(v.min()), neg, v.size, clamped)


def write_snapshot(path, field: Field, grid: NoiseGrid, d: int = 1) -> None:
    """Noise-dump header, then the time index as uint64, then float64 values."""
    values = np.ascontiguousarray(field.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, d, grid.n_cells, grid.dt))
        fh.write(struct.pack("<Q", field.index))
        fh.write(values.tobytes())


def read_snapshot(path) -> tuple[Field, dict]:
    raw = Path(path).read_bytes()
    magic, d, n_cells, dt = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise ValueError(f"not a field snapshot: magic {magic!r}")
    (index,) = struct.unpack_from("<Q", raw, _HEADER.size)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size + 8).reshape(-1, n_cells)
    values = data[0] if data.shape[0] == 1 else data
    return Field(values.copy(), index), {"d": d, "n_cells": n_cells, "dt": dt}
