"""Experiment configs, manifests and the simulate / lemmas / noise-check runners."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import (
    AverageSamples,
    center_and_scale,
    chaos1_variance,
    spatial_integral,
    variance_limit,
    variance_with_se,
)
from .kernels import DomainError, ModelParams, kbeta, kbeta_closed_form, kbeta_qmc
from .lemma_lab import LEMMAS, run_suite, write_lemma_csv, write_lemma_json
from .noise import (
    CirculantSampler,
    NoiseGrid,
    cell_covariance,
    covariance_error_in_se,
    sample_cholesky,
    second_moment_with_se,
)
from .rng import StreamFactory, sub_seed
from .solver import ConfigError, SolverConfig, solve_batch
from .stats import bandwidth_sensitivity, distance_entry, fit_rate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CHUNK = 64
BETA_GUARD_D1 = 0.9

_DEFAULTS = {
    "schema": SCHEMA_VERSION,
    "params": {"d": 1, "beta": 0.5, "t": 0.25},
    "grid": {"h": 0.05, "dt": 1e-3, "margin": None},
    "R": [2.0, 4.0, 8.0],
    "replicas": 2000,
    "master_seed": 20240601,
    "sigma_mode": "empirical",
    "estimator": {"bandwidth": None, "bootstrap": 500},
    "zero_noise": False,
    "lemmas": {"beta": 0.5, "t": 0.25, "select": list(LEMMAS), "seed": 0},
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {path + k!r} must be an object")
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def validate_beta(d: int, beta: float) -> None:
    """Paper range ``0 < beta < min(2, d)`` plus the practical guard ``beta <= 0.9`` in d = 1."""
    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise ConfigError(f"beta must be a number, got {beta!r}") from None
    if not 0.0 < beta < min(2, d):
        raise ConfigError(f"beta={beta} outside 0 < beta < min(2, d={d})")
    if d == 1 and beta > BETA_GUARD_D1:
        raise ConfigError(f"beta={beta} above the d = 1 guard {BETA_GUARD_D1}")


@dataclass
class ExperimentConfig:
    params: ModelParams
    h: float
    dt: float
    margin: float | None
    R: list[float]
    replicas: int
    master_seed: int
    sigma_mode: str
    bandwidth: float | None
    bootstrap: int
    zero_noise: bool
    lemmas: dict
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        schema = data.get("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {schema!r} (expected {SCHEMA_VERSION})")
        cfg = _merge(_DEFAULTS, data)
        p = cfg["params"]
        d = int(p["d"])
        validate_beta(d, p["beta"])
        try:
            params = ModelParams(d, float(p["beta"]), float(p["t"]))
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        R = [float(r) for r in cfg["R"]]
        if not R or any(b <= a for a, b in zip(R, R[1:])) or R[0] <= 0:
            raise ConfigError("R ladder must be positive and strictly increasing")
        replicas = int(cfg["replicas"])
        if replicas < 2:
            raise ConfigError("need at least two replicas")
        if cfg["sigma_mode"] not in ("empirical", "chaos1", "limit"):
            raise ConfigError(f"unknown sigma_mode {cfg['sigma_mode']!r}")
        seed = int(cfg["master_seed"])
        if not 0 <= seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        lem = cfg["lemmas"]
        validate_beta(1, lem["beta"])
        sel = list(lem["select"])
        if not sel:
            raise ConfigError("empty lemma selection")
        bad = set(sel) - set(LEMMAS)
        if bad:
            raise ConfigError(f"unknown lemmas {sorted(bad)}")
        return cls(params, float(cfg["grid"]["h"]), float(cfg["grid"]["dt"]), cfg["grid"]["margin"],
                   R, replicas, seed, cfg["sigma_mode"], cfg["estimator"]["bandwidth"],
                   int(cfg["estimator"]["bootstrap"]), bool(cfg["zero_noise"]), lem, cfg)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        return ExperimentConfig.from_dict({**self.raw, "master_seed": int(seed)})

    def solver_config(self) -> SolverConfig:
        if self.params.d != 1:
            raise ConfigError("simulation is implemented for d = 1")
        try:
            cfg = SolverConfig.build(self.params.t, self.h, self.dt, max(self.R), self.margin)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        for R in self.R:
            m = R / self.h
            if abs(m - round(m)) > 1e-9:
                raise ConfigError(f"R={R} is not a multiple of h={self.h}")
        return cfg

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    master_seed: int
    replicas_per_R: dict
    seeds: dict
    command: str
    wall_times: dict = field(default_factory=dict)
    status: str = "running"

    def write(self, out: Path) -> None:
        (out / "manifest.json").write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")


def _num(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _R_label(R: float) -> str:
    return f"{R:g}"


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationResult:
    config: ExperimentConfig
    samples: dict  # R -> AverageSamples
    positivity: dict
    report: dict


def simulate_integrals(config: ExperimentConfig, threads: int = 1, replica_ids=None):
    """Spatial integrals over every Q_R for each replica, shape (n_replicas, n_R).

    Replicas run in fixed chunks of `CHUNK` ids so the arithmetic, and hence
    every bit of the output, is independent of the thread count.  Also
    returns positivity counts over all terminal cells.
    """
    scfg = config.solver_config()
    ids = np.arange(config.replicas) if replica_ids is None else np.asarray(replica_ids)
    chunks = [ids[i:i + CHUNK] for i in range(0, ids.size, CHUNK)]
    grid = scfg.grid

    def work(chunk):
        u = solve_batch(config.params, scfg, config.master_seed, chunk.tolist(),
                        zero_noise=config.zero_noise, streams=StreamFactory())
        ints = np.stack([spatial_integral(u, grid, R) for R in config.R], axis=1)
        return ints, int(np.count_nonzero(u < 0)), float(u.min()), u.size

    if threads <= 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    ints = np.concatenate([p[0] for p in parts], axis=0)
    neg = sum(p[1] for p in parts)
    total = sum(p[3] for p in parts)
    pos = {"fraction_nonnegative": 1.0 - neg / total, "minimum": min(p[2] for p in parts),
           "n_negative": neg, "n_cells": total, "clamped": False}
    return ints, pos


def _weights_from_ci(values, cis):
    # inverse variance of log(distance), with se read off the 95% interval
    w = []
    for v, (lo, hi) in zip(values, cis):
        se = (hi - lo) / 3.92
        w.append((v / se) ** 2 if se > 0 and v > 0 else 1.0)
    return w


def analyse(config: ExperimentConfig, integrals: np.ndarray) -> tuple[dict, list]:
    """Variance table, per-R distances with bootstrap CIs, rate fits and bandwidth sensitivity."""
    p = config.params
    samples = {R: AverageSamples(R, integrals[:, j], p) for j, R in enumerate(config.R)}
    variance_rows, entries, Fs, degenerate = [], [], {}, False
    for j, R in enumerate(config.R):
        s = samples[R]
        var, se = variance_with_se(s.raw)
        c1 = chaos1_variance(R, p.t, p)
        lim = variance_limit(R, p.t, p)
        variance_rows.append({"R": R, "n": s.raw.size, "variance": var, "variance_se": se,
                              "chaos1_variance": c1, "limit_variance": lim,
                              "var_over_chaos1": var / c1, "var_over_limit": var / lim,
                              "var_over_limit_se": se / lim})
        if not var > 0:
            degenerate = True
            continue
        F = center_and_scale(s, config.sigma_mode)
        Fs[R] = F
    fits, sens = {}, {}
    if not degenerate:
        if config.replicas < 100:
            raise ConfigError("distance estimation needs at least 100 replicas")
        for R in config.R:
            e = distance_entry(R, Fs[R], n_boot=config.bootstrap,
                               seed=sub_seed(config.master_seed, 0xB007, int(round(R * 1e6))),
                               bandwidth=config.bandwidth)
            entries.append(e)
            sens[_R_label(R)] = bandwidth_sensitivity(Fs[R])
        if len(entries) >= 3:
            for name, ci in (("tv", "tv_ci"), ("sup_dist", "sup_ci"), ("kolmogorov", "kolmogorov_ci")):
                vals = [getattr(e, name) for e in entries]
                if min(vals) > 0:
                    f = fit_rate(list(zip(config.R, vals)),
                                 _weights_from_ci(vals, [getattr(e, ci) for e in entries]))
                    fits[name] = asdict(f)
    report = {
        "sigma_mode": config.sigma_mode,
        "params": asdict(p),
        "replicas": config.replicas,
        "degenerate": degenerate,
        "variance": variance_rows,
        "kbeta": kbeta(p.d, p.beta),
        "distances": [asdict(e) for e in entries],
        "rate_fits": fits,
        "bandwidth_sensitivity": sens,
        "notes": ["one solver field per replica serves every R, so per-R samples are positively "
                  "correlated; rate fits weight each R by its own bootstrap interval"],
    }
    return report, [samples, Fs, entries]


def run_simulate(config: ExperimentConfig, out, threads: int = 1) -> SimulationResult:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config.digest(), __version__, config.master_seed,
                           {_R_label(R): config.replicas for R in config.R},
                           {"master_seed": config.master_seed, "bootstrap": "sub_seed(master, 0xB007, R*1e6)"},
                           "simulate")
    manifest.write(out)
    t0 = time.perf_counter()
    integrals, pos = simulate_integrals(config, threads)
    t1 = time.perf_counter()
    report, (samples, Fs, entries) = analyse(config, integrals)
    report["positivity"] = pos
    t2 = time.perf_counter()

    for j, R in enumerate(config.R):
        F = Fs.get(R)
        _write_csv(out / f"samples_R{_R_label(R)}.csv", ["replica_id", "raw_integral", "F_value"],
                   ((i, integrals[i, j], None if F is None else F[i]) for i in range(config.replicas)))
    header = ["R", "n", "sup_dist", "sup_dist_ci_lo", "sup_dist_ci_hi", "tv", "kolmogorov", "bandwidth",
              "sigma_mode", "sup_argmax", "tv_ci_lo", "tv_ci_hi", "kolmogorov_ci_lo", "kolmogorov_ci_hi"]
    if report["degenerate"]:
        rows = [[R, config.replicas] + [None] * 6 + [config.sigma_mode, None, None, None, None, None]
                for R in config.R]
    else:
        rows = [[e.R, e.n, e.sup_dist, *e.sup_ci, e.tv, e.kolmogorov, e.bandwidth, config.sigma_mode,
                 e.sup_argmax, *e.tv_ci, *e.kolmogorov_ci] for e in entries]
    _write_csv(out / "distances.csv", header, rows)
    _write_csv(out / "variance.csv", list(report["variance"][0]),
               ([r[k] for k in r] for r in report["variance"]))
    bw_rows = [[R, r["factor"], r["bandwidth"], r["sup_dist"], r["tv"]]
               for R, lst in report["bandwidth_sensitivity"].items() for r in lst]
    _write_csv(out / "bandwidth.csv", ["R", "factor", "bandwidth", "sup_dist", "tv"], bw_rows)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_num) + "\n",
                                     encoding="utf-8")
    manifest.wall_times = {"simulate_s": round(t1 - t0, 3), "analyse_s": round(t2 - t1, 3)}
    manifest.status = "done"
    manifest.write(out)
    return SimulationResult(config, samples, pos, report)


# ---------------------------------------------------------------------------
# acceptance checks on a simulation report


def _non_increasing(vals, cis) -> bool:
    # each step either decreases or has overlapping bootstrap intervals
    return all(b <= a or cb[0] <= ca[1] for a, b, ca, cb in zip(vals, vals[1:], cis, cis[1:]))


def simulation_checks(report: dict, beta: float) -> list[tuple[str, bool, str]]:
    """Variance, normality and density checks on a `run_simulate` report."""
    out = []
    if report["degenerate"]:
        return [("degenerate", False, "zero variance: distances undefined")]
    var = report["variance"]
    within = all(abs(r["var_over_chaos1"] - 1.0) <= 0.15 for r in var)
    last = var[-1]
    near = abs(last["var_over_limit"] - 1.0) <= 0.20
    ratios = [r["var_over_limit"] for r in var]
    ses = [r["var_over_limit_se"] for r in var]
    mono = all(b >= a - math.hypot(sa, sb) for a, b, sa, sb in zip(ratios, ratios[1:], ses, ses[1:]))
    out.append(("variance", within and near and mono,
                f"Var/chaos1={[round(r['var_over_chaos1'], 3) for r in var]} "
                f"Var/limit={[round(x, 3) for x in ratios]}"))
    d = report["distances"]
    ks_ok = d[-1]["kolmogorov"] <= 0.05
    ks_mono = _non_increasing([e["kolmogorov"] for e in d], [e["kolmogorov_ci"] for e in d])
    tv_mono = _non_increasing([e["tv"] for e in d], [e["tv_ci"] for e in d])
    slope = report["rate_fits"].get("tv", {}).get("slope", float("nan"))
    slope_ok = -beta - 0.3 <= slope < 0
    out.append(("normality", ks_ok and ks_mono and tv_mono and slope_ok,
                f"KS={[round(e['kolmogorov'], 4) for e in d]} TV slope={slope:.3f}"))
    sup_ok = d[-1]["sup_dist"] <= 0.05
    sup_mono = _non_increasing([e["sup_dist"] for e in d], [e["sup_ci"] for e in d])
    out.append(("density", sup_ok and sup_mono and bool(report["bandwidth_sensitivity"]),
                f"sup={[round(e['sup_dist'], 4) for e in d]}"))
    return out


# ---------------------------------------------------------------------------
# lemma, k_beta and noise runners


def run_lemmas(config: ExperimentConfig, out, threads: int = 1):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    lem = config.lemmas
    manifest = RunManifest(config.digest(), __version__, int(lem["seed"]), {},
                           {"lemma_seed": int(lem["seed"])}, "lemmas")
    manifest.write(out)
    t0 = time.perf_counter()
    names = list(lem["select"])
    job = lambda name: run_suite(float(lem["beta"]), float(lem["t"]), int(lem["seed"]), [name])
    if threads <= 1:
        parts = [job(n) for n in names]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, names))
    results = [r for part in parts for r in part]
    for r in results:
        write_lemma_csv(r, out / f"lemma_{r.lemma}.csv")
    write_lemma_json(results, out / "lemmas.json")
    manifest.wall_times = {"lemmas_s": round(time.perf_counter() - t0, 3)}
    manifest.status = "done"
    manifest.write(out)
    return results


def run_kbeta(d: int, beta: float) -> dict:
    validate_beta(d, beta)
    out = {"d": d, "beta": beta, "kbeta": kbeta(d, beta)}
    if d == 1:
        out["closed_form"] = kbeta_closed_form(beta)
    else:
        val, se = kbeta_qmc(d, beta)
        out["qmc"], out["qmc_stderr"] = val, se
    return out


def run_noise_check(n_cells: int = 64, h: float = 0.05, dt: float = 1e-3, beta: float = 0.5,
                    n_samples: int = 100_000, seed: int = 0) -> dict:
    """Max entrywise covariance error (in standard errors) for both samplers."""
    validate_beta(1, beta)
    grid = NoiseGrid(n_cells, h, dt)
    C = cell_covariance(grid, beta)
    target = dt * C
    circ = CirculantSampler(grid, beta).sample(dt, np.random.default_rng(sub_seed(seed, 1)), n_samples)
    chol = sample_cholesky(C, dt, np.random.default_rng(sub_seed(seed, 2)), n_samples)
    e_circ = covariance_error_in_se(circ, target)
    e_chol = covariance_error_in_se(chol, target)
    m1, s1 = second_moment_with_se(circ)
    m2, s2 = second_moment_with_se(chol)
    gap = np.abs(m1 - m2) / np.hypot(s1, s2)
    return {"n_cells": n_cells, "h": h, "dt": dt, "beta": beta, "n_samples": n_samples, "seed": seed,
            "circulant_max_err_se": float(e_circ.max()), "cholesky_max_err_se": float(e_chol.max()),
            "sampler_gap_max_se": float(gap.max())}
