"""Numerical checks of the singular-integral lemmas behind the rate theorems.

Every Gaussian-smoothed Riesz factor ``int p_v(z - w) |w|^-beta dw`` that can
be integrated analytically is replaced by its closed form
(`pamlab.kernels.heat_riesz`).  What remains for the QMC checks is a smooth
integrand over uniform box coordinates and standard normals, so scrambled
Sobol points converge quickly and no singular substitution is needed.

The normalising variance inside ``phi_{R,t}`` is always the limit
``sigma^2 = k_beta t R^(2d - beta)``, which keeps every check deterministic.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from .kernels import (
    DomainError,
    QuadratureError,
    _corner_rect_integral,
    box_pair_integral,
    check_beta,
    heat_riesz,
    kbeta,
    riesz_fourier_constant,
    sinc2_riesz_integral,
    sinc2_riesz_limit,
)
from .rng import sub_seed
from .stats import fit_rate

LEMMAS = ("heat_riesz", "qr_riesz", "m_scaling", "E_growth", "varphi_pair", "phi_i_bound")
SLACK = 0.3


def limit_sigma2(R: float, t: float, beta: float, d: int = 1) -> float:
    return kbeta(d, beta) * t * R ** (2 * d - beta)


@dataclass(frozen=True)
class PhiWeight:
    """``phi_{R,t}(tau, xi) = sigma^-1 int_{Q_R} p_{t - tau}(x - xi) dx`` with the limit sigma.

    Per coordinate the box integral is ``Phi((R - xi)/sqrt(v)) - Phi((-R - xi)/sqrt(v))``.
    """

    R: float
    t: float
    beta: float
    d: int = 1

    @property
    def sigma(self) -> float:
        return math.sqrt(limit_sigma2(self.R, self.t, self.beta, self.d))

    def __call__(self, tau, xi):
        xi = np.asarray(xi, dtype=float)
        if self.d > 1:
            xi = xi.reshape(*xi.shape[:-1], self.d) if xi.shape[-1:] == (self.d,) else xi
        v = self.t - np.asarray(tau, dtype=float)
        if np.any(v < 0):
            raise DomainError("need tau <= t")
        with np.errstate(divide="ignore", invalid="ignore"):
            sd = np.sqrt(v)[..., None] if self.d > 1 else np.sqrt(v)
            mass = special.ndtr((self.R - xi) / sd) - special.ndtr((-self.R - xi) / sd)
        inside = np.where(np.abs(xi) < self.R, 1.0, np.where(np.abs(xi) == self.R, 0.5, 0.0))
        mass = np.where(sd == 0, inside, mass)
        if self.d > 1:
            mass = np.prod(mass, axis=-1)
        return mass / self.sigma


@dataclass
class LemmaCheckResult:
    lemma: str
    parameters: dict
    rows: list[dict] = field(default_factory=list)
    slope: float | None = None
    slope_stderr: float | None = None
    bound: float | None = None
    summary: dict = field(default_factory=dict)
    passed: bool = False

    def verdict(self) -> dict:
        return {"lemma": self.lemma, "passed": bool(self.passed), "slope": self.slope,
                "slope_stderr": self.slope_stderr, "bound": self.bound,
                "parameters": self.parameters, **self.summary}


def write_lemma_csv(result: LemmaCheckResult, path) -> None:
    """One row per evaluated point: parameters, estimate, stderr, fitted exponent."""
    keys: list[str] = []
    for row in result.rows:
        keys += [k for k in row if k not in keys]
    keys += ["fitted_exponent", "fitted_exponent_stderr"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\r\n")
        w.writeheader()
        for row in result.rows:
            w.writerow({**{k: _fmt(v) for k, v in row.items()},
                        "fitted_exponent": _fmt(result.slope),
                        "fitted_exponent_stderr": _fmt(result.slope_stderr)})


def write_lemma_json(results, path) -> None:
    data = {"verdicts": [r.verdict() for r in results],
            "all_passed": all(r.passed for r in results)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_fmt)
        fh.write("\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---------------------------------------------------------------------------
# heat kernel against the Riesz kernel


def heat_riesz_quad(x: float, t: float, beta: float, epsrel: float = 1e-10) -> float:
    """``int p_t(x - y) |y|^-beta dy`` in d = 1 by adaptive quadrature.

    Folded onto ``y >= 0`` so the algebraic weight handles the singularity;
    the Gaussian is cut 40 standard deviations beyond ``|x|``.
    """
    x = abs(float(x))
    sd = math.sqrt(t)
    g = lambda y: (math.exp(-(x - y) ** 2 / (2 * t)) + math.exp(-(x + y) ** 2 / (2 * t))) / math.sqrt(2 * math.pi * t)
    a = 0.5 * min(x, sd) if x > 0 else 0.5 * sd
    hi = x + 40.0 * sd
    head, _ = _quad_checked(g, 0.0, a, epsrel, weight="alg", wvar=(-beta, 0.0))
    tail, _ = _quad_checked(lambda y: g(y) * y ** -beta, a, hi, epsrel,
                            points=[x] if a < x < hi else None)
    return head + tail


def _quad_checked(f, lo, hi, epsrel, **kw):
    kw = {k: v for k, v in kw.items() if v is not None}
    val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=500, **kw)
    if not abs(err) <= max(100.0 * epsrel * abs(val), 1e-300):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] reached only {err:.2e}",
                              achieved=abs(err / val) if val else float("inf"))
    return val, err


def check_heat_riesz(x_list=(0.5, 1.0, 2.0), beta: float = 0.5, d: int = 1, t_grid=None,
                     scale_factors=(2.0, 10.0)) -> LemmaCheckResult:
    """Sup over a log t-grid of ``int p_t(x - y)|y|^-beta dy / |x|^-beta``.

    Also checks the scaling identity ratio(lam x, lam^2 t) = ratio(x, t).
    """
    if d != 1:
        raise DomainError("check_heat_riesz reduces to one dimension; d must be 1")
    check_beta(d, beta)
    t_grid = np.logspace(-4, 2, 61) if t_grid is None else np.asarray(t_grid, dtype=float)
    rows, worst_scale = [], 0.0
    for x in x_list:
        if x == 0:
            raise DomainError("x must be nonzero")
        ratios = np.array([heat_riesz_quad(x, t, beta) * abs(x) ** beta for t in t_grid])
        i = int(np.argmax(ratios))
        dev = 0.0
        for lam in scale_factors:
            scaled = heat_riesz_quad(lam * x, lam * lam * t_grid[i], beta) * abs(lam * x) ** beta
            dev = max(dev, abs(scaled - ratios[i]) / ratios[i])
        worst_scale = max(worst_scale, dev)
        rows.append({"x": x, "beta": beta, "sup_ratio": float(ratios[i]), "t_at_sup": float(t_grid[i]),
                     "ratio_at_min_t": float(ratios[0]), "scaling_rel_dev": dev})
    ok = all(math.isfinite(r["sup_ratio"]) and r["sup_ratio"] >= 1.0 for r in rows) and worst_scale <= 1e-6
    return LemmaCheckResult("heat_riesz", {"beta": beta, "d": d, "t_min": float(t_grid[0]),
                                           "t_max": float(t_grid[-1]), "n_t": int(t_grid.size)},
                            rows, summary={"max_scaling_rel_dev": worst_scale,
                                           "max_sup_ratio": max(r["sup_ratio"] for r in rows)},
                            passed=ok)


# ---------------------------------------------------------------------------
# Riesz potential of a box


def qr_riesz(R: float, x, beta: float, d: int = 1) -> float:
    """``int_{Q_R} |x - y|^-beta dy``; closed form in d = 1, Duffy rule in d = 2."""
    check_beta(d, beta)
    if d == 1:
        x = abs(float(np.ravel(x)[0]) if np.ndim(x) else float(x))
        p = 1.0 - beta
        if x <= R:
            return ((R + x) ** p + (R - x) ** p) / p
        return ((x + R) ** p - (x - R) ** p) / p
    if d == 2:
        x1, x2 = (float(v) for v in np.ravel(x))
        ones = lambda a, b: np.ones_like(a)

        def corner(A, B):
            if A == 0 or B == 0:
                return 0.0
            return math.copysign(1.0, A) * math.copysign(1.0, B) * _corner_rect_integral(ones, abs(A), abs(B), beta, n=32)

        lo1, hi1, lo2, hi2 = -R - x1, R - x1, -R - x2, R - x2
        return corner(hi1, hi2) - corner(lo1, hi2) - corner(hi1, lo2) + corner(lo1, lo2)
    raise DomainError("qr_riesz supports d = 1 and d = 2")


def check_qr_riesz(R_list=(1, 2, 4, 8, 16, 32, 64), x_list=(0.0, 0.25, 0.5), beta: float = 0.5,
                   d: int = 1) -> LemmaCheckResult:
    """Box Riesz potential over a geometric R ladder and its fitted R-exponent per x."""
    R_list = list(R_list)
    if len(R_list) < 5:
        raise ValueError("need at least five R values")
    rows, fits = [], {}
    for x in x_list:
        xv = x if d == 1 else (x, 0.0)
        vals = [qr_riesz(R, xv, beta, d) for R in R_list]
        fit = fit_rate(list(zip(R_list, vals)))
        fits[x] = fit
        rows += [{"x": x, "R": R, "beta": beta, "value": v} for R, v in zip(R_list, vals)]
    target = d - beta
    dev_center = abs(fits[x_list[0]].slope - target) if 0.0 in x_list else 0.0
    off = [abs(f.slope - target) for x, f in fits.items() if x != 0.0]
    ok = (0.0 not in x_list or dev_center <= 1e-6) and all(o <= 0.05 for o in off)
    main = fits[x_list[0]]
    return LemmaCheckResult("qr_riesz", {"beta": beta, "d": d, "R_list": R_list, "x_list": list(x_list)},
                            rows, main.slope, main.stderr, target,
                            {"slopes": {str(x): f.slope for x, f in fits.items()},
                             "center_deviation": dev_center, "max_offcenter_deviation": max(off, default=0.0)},
                            ok)


# ---------------------------------------------------------------------------
# the m-lemma integral


def m_integral(eps: float, R: float, beta: float, alpha: float = 0.8, d: int = 1) -> float:
    """``J(eps, R) = int (1 - e^{-a|eta|^2})/(a|eta|^2) prod sinc^2(eta_j) |eta|^(beta-d) d eta``, ``a = eps^alpha / R^2``."""
    if beta > d - 0.05:
        raise DomainError(f"beta={beta} too close to d={d}: the tail integral diverges as beta -> d")
    return sinc2_riesz_integral(beta, d, "g", eps**alpha / R**2)


def check_m_scaling(t: float = 0.25, alpha: float = 0.8, eps_list=(1e-3, 1e-2, 1e-1, 1.0),
                    R_list=(1, 2, 4, 8, 16), beta: float = 0.5, d: int = 1) -> LemmaCheckResult:
    """J over an (eps, R) grid, the normalisation-free ``M = R^(2d-beta) eps^alpha J`` and ``m = M / sigma^2``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if beta > d - 0.05:
        raise DomainError(f"beta={beta} too close to d={d}: the tail integral diverges as beta -> d")
    if max(eps_list) > 1.0 or min(R_list) < 1.0:
        raise DomainError("the lemma covers eps <= 1 and R >= 1")
    J0 = sinc2_riesz_limit(beta)
    rows = []
    for R in R_list:
        for eps in eps_list:
            J = m_integral(eps, R, beta, alpha, d)
            M = R ** (2 * d - beta) * eps**alpha * J
            rows.append({"eps": eps, "R": R, "a": eps**alpha / R**2, "J": J, "M": M,
                         "m": M / limit_sigma2(R, t, beta, d)})
    by_a = sorted(rows, key=lambda r: r["a"])
    monotone = all(r2["J"] <= r1["J"] * (1 + 1e-9) for r1, r2 in zip(by_a, by_a[1:]))
    Js = [r["J"] for r in rows]
    ok = min(Js) > 0 and monotone and max(Js) <= J0 * (1 + 1e-8) and min(Js) >= 0.5 * J0
    return LemmaCheckResult("m_scaling", {"t": t, "alpha": alpha, "beta": beta, "d": d,
                                          "eps_list": list(eps_list), "R_list": list(R_list)},
                            rows, bound=0.5 * J0,
                            summary={"J0": J0, "J_min": min(Js), "J_max": max(Js),
                                     "min_over_J0": min(Js) / J0, "monotone": monotone},
                            passed=ok)


# ---------------------------------------------------------------------------
# randomized QMC


def _stream_seed(seed: int, integrand: str, params: dict) -> np.random.SeedSequence:
    blob = json.dumps({"integrand": integrand, **params}, sort_keys=True, default=float).encode()
    h = int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")
    return sub_seed(seed, h)


def rqmc_mean(f, dim: int, n_points: int, n_scrambles: int, seed: np.random.SeedSequence,
              chunk: int = 2**17) -> tuple[float, float]:
    """Mean of *f* over ``n_scrambles`` independently scrambled Sobol sets.

    Returns the grand mean and its standard error across scrambles.
    """
    per = n_points // n_scrambles
    m = int(round(math.log2(per)))
    if 2**m != per:
        raise ValueError("n_points / n_scrambles must be a power of two")
    means = np.empty(n_scrambles)
    for k, child in enumerate(seed.spawn(n_scrambles)):
        sob = qmc.Sobol(dim, scramble=True, bits=64, seed=np.random.default_rng(child))
        u = sob.random_base2(m)
        acc = 0.0
        for lo in range(0, per, chunk):
            acc += float(np.sum(f(u[lo:lo + chunk])))
        means[k] = acc / per
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_scrambles))


def _normal(u):
    return special.ndtri(np.clip(u, 1e-16, 1.0 - 1e-16))


def _smoothed_riesz(z, v, beta):
    # E|z + sqrt(v) Z|^-beta; identically 1 in the degenerate beta = 0 case
    if beta == 0.0:
        return np.ones_like(np.asarray(z, dtype=float))
    return heat_riesz(z, v, beta)


def _check_qmc_beta(beta):
    if beta != 0.0:
        check_beta(1, beta)


def E_integral(R: float, t: float, s1: float, s2: float, tau: float, beta: float,
               n_points: int = 2**21, n_scrambles: int = 16, seed: int = 0) -> tuple[float, float]:
    """RQMC estimate of ``E_{R,t}(s1, s2, tau)`` (d = 1) and its standard error.

    The two tilde-y variables and xi are integrated in closed form; the
    remaining variables are::

        eta1 = x1 + sqrt(t - s1) Z1        (marginal of y1)
        a    = x2 + sqrt(t - tau) Z2       (tilde xi)
        eta2 = a  + sqrt(tau - s2) Z3      (y2)

    with weight ``H(eta1 - x3, t - s1) H(eta2 - x4, t - s2) H(mu - a, v)``,
    where xi given y1 is Gaussian with mean ``mu`` and variance ``v`` and
    ``H(z, v) = E|z + sqrt(v) Z|^-beta``.  ``beta = 0`` turns every Riesz
    factor into 1, giving ``(2R)^4`` exactly.
    """
    _check_qmc_beta(beta)
    if not (0.0 < s1 < tau < t and 0.0 < s2 < tau):
        raise DomainError("need 0 < s1, s2 < tau < t")
    mu_gain = (t - tau) / (t - s1)
    v_b = (t - tau) * (tau - s1) / (t - s1)

    def f(u):
        x = (2.0 * u[:, :4] - 1.0) * R
        eta1 = x[:, 0] + math.sqrt(t - s1) * _normal(u[:, 4])
        a = x[:, 1] + math.sqrt(t - tau) * _normal(u[:, 5])
        eta2 = a + math.sqrt(tau - s2) * _normal(u[:, 6])
        mu = x[:, 0] + mu_gain * (eta1 - x[:, 0])
        return (_smoothed_riesz(eta1 - x[:, 2], t - s1, beta)
                * _smoothed_riesz(eta2 - x[:, 3], t - s2, beta)
                * _smoothed_riesz(mu - a, v_b, beta))

    params = {"R": R, "t": t, "s1": s1, "s2": s2, "tau": tau, "beta": beta, "n": n_points}
    mean, se = rqmc_mean(f, 7, n_points, n_scrambles, _stream_seed(seed, "E", params))
    vol = (2.0 * R) ** 4
    return mean * vol, se * vol


def check_E_growth(t: float = 0.25, s1: float = 0.0625, s2: float = 0.03125, tau: float = 0.125,
                   beta: float = 0.5, R_list=(1, 2, 4, 8), n_points: int = 2**21,
                   n_scrambles: int = 16, seed: int = 0, max_rel_se: float = 0.05) -> LemmaCheckResult:
    """E over an R ladder and its fitted growth exponent against ``4 - 3 beta``."""
    rows = []
    for R in R_list:
        est, se = E_integral(R, t, s1, s2, tau, beta, n_points, n_scrambles, seed)
        if not se <= max_rel_se * abs(est):
            raise QuadratureError(f"E at R={R}: relative QMC error {se / est:.3g} above {max_rel_se}; "
                                  "increase n_points", achieved=se / est)
        rows.append({"R": R, "estimate": est, "stderr": se, "rel_stderr": se / est})
    fit = fit_rate([(r["R"], r["estimate"]) for r in rows])
    bound = 4 - 3 * beta + SLACK
    return LemmaCheckResult("E_growth", {"t": t, "s1": s1, "s2": s2, "tau": tau, "beta": beta,
                                         "R_list": list(R_list), "n_points": n_points, "seed": seed},
                            rows, fit.slope, fit.stderr, bound,
                            {"lemma_exponent": 4 - 3 * beta,
                             "max_rel_stderr": max(r["rel_stderr"] for r in rows)},
                            fit.slope <= bound)


# ---------------------------------------------------------------------------
# phi-pair integral


def varphi_pair(R: float, t: float, s: float, r: float, beta: float, d: int = 1) -> float:
    """``int int phi_{R,t}(s, y) phi_{R,t}(r, z) |y - z|^-beta dy dz`` via the sinc^2 Fourier form.

    Equals ``sigma^-2 (2 pi)^-1 c_{1,beta} 4 R^(2-beta) I_exp(b)`` with
    ``b = (2t - s - r) / (2 R^2)``.
    """
    if d != 1:
        raise DomainError("the phi-pair reduction is implemented for d = 1")
    if not (0.0 <= s <= t and 0.0 <= r <= t):
        raise DomainError("need s, r in [0, t]")
    b = (2.0 * t - s - r) / (2.0 * R * R)
    I = sinc2_riesz_integral(beta, 1, "exp", b) if b > 0 else sinc2_riesz_limit(beta)
    c = riesz_fourier_constant(1, beta)
    return c * 4.0 * R ** (2 - beta) * I / (2.0 * math.pi) / limit_sigma2(R, t, beta, d)


def varphi_pair_realspace(R: float, t: float, s: float, r: float, beta: float) -> float:
    """Same quantity as `varphi_pair` from ``sigma^-2 int_{Q_R^2} H(x1 - x2, 2t - s - r)``."""
    v = 2.0 * t - s - r
    if v == 0:
        return kbeta(1, beta) * R ** (2 - beta) / limit_sigma2(R, t, beta)
    val = box_pair_integral(R, 1, lambda x: heat_riesz(x, v, beta))
    return val / limit_sigma2(R, t, beta)


def check_varphi_pair(t: float = 0.25, beta: float = 0.5, d: int = 1,
                      R_list=(1, 2, 4, 8, 16, 32, 64), sr_grid=None) -> LemmaCheckResult:
    """Sup over an (s, r) grid of the phi-pair integral for each R; passes if max/min across R <= 3."""
    grid = np.linspace(0.0, t, 5) if sr_grid is None else np.asarray(sr_grid, dtype=float)
    rows, sups = [], []
    for R in R_list:
        cache = {}
        for s in grid:
            for r in grid:
                key = (min(s, r), max(s, r))
                if key not in cache:
                    cache[key] = varphi_pair(R, t, s, r, beta, d)
                rows.append({"R": R, "s": float(s), "r": float(r), "value": cache[key]})
        sups.append(max(cache.values()))
    spread = max(sups) / min(sups)
    return LemmaCheckResult("varphi_pair", {"t": t, "beta": beta, "d": d, "R_list": list(R_list),
                                            "sr_grid": [float(g) for g in grid]},
                            rows, bound=3.0,
                            summary={"sup_by_R": dict(zip(map(str, R_list), sups)),
                                     "max_over_min": spread, "endpoint_value": 1.0 / t},
                            passed=spread <= 3.0)


# ---------------------------------------------------------------------------
# Phi^(i) bounds


def phi_i_integral(i: int, R: float, t: float, tau: float, xi: float, beta: float,
                   n_points: int = 2**20, n_scrambles: int = 16, seed: int = 0) -> tuple[float, float]:
    """RQMC estimate of ``Phi^(i)(tau, xi)`` (d = 1) with the limit sigma in both weights.

    The time simplex ``0 < r < s < tau`` is sampled as ``s = tau sqrt(u1)``,
    ``r = s u2`` (uniform, area ``tau^2/2``).

    i = 1: ``tilde y = x1 + sqrt(t - s) Z``, weight
    ``H(xi - tilde y, tau - s) H(tilde y - x2, (s - r) + (t - r))``.

    i = 2: ``y = xi + sqrt(tau - s) Z1``, ``z = y + sqrt(s - r) Z2``, weight
    ``H(y - x1, t - s) H(z - x2, t - r)``.
    """
    _check_qmc_beta(beta)
    if i not in (1, 2):
        raise ValueError("i must be 1 or 2")
    if not 0.0 <= tau < t:
        raise DomainError("need 0 <= tau < t")
    if tau == 0.0:
        return 0.0, 0.0

    def f(u):
        s = tau * np.sqrt(u[:, 0])
        r = s * u[:, 1]
        x1 = (2.0 * u[:, 2] - 1.0) * R
        x2 = (2.0 * u[:, 3] - 1.0) * R
        if i == 1:
            yt = x1 + np.sqrt(t - s) * _normal(u[:, 4])
            return _smoothed_riesz(xi - yt, tau - s, beta) * _smoothed_riesz(yt - x2, t + s - 2.0 * r, beta)
        y = xi + np.sqrt(tau - s) * _normal(u[:, 4])
        z = y + np.sqrt(s - r) * _normal(u[:, 5])
        return _smoothed_riesz(y - x1, t - s, beta) * _smoothed_riesz(z - x2, t - r, beta)

    params = {"i": i, "R": R, "t": t, "tau": tau, "xi": xi, "beta": beta, "n": n_points}
    mean, se = rqmc_mean(f, 4 + i, n_points, n_scrambles, _stream_seed(seed, "Phi", params))
    sigma2 = limit_sigma2(R, t, beta) if beta > 0 else 4.0 * t * R * R
    c = 0.5 * tau * tau * (2.0 * R) ** 2 / sigma2
    return mean * c, se * c


def check_phi_i_bound(t: float = 0.25, tau: float = 0.125, xi_list=(0.0, 0.5, 1.0), beta: float = 0.5,
                      R_list=(1, 2, 4, 8), i: int = 1, n_points: int = 2**20, n_scrambles: int = 16,
                      seed: int = 0, max_rel_se: float = 0.05) -> LemmaCheckResult:
    """``sup_xi Phi^(i)(tau, xi)`` per R and its fitted exponent against ``-beta``."""
    rows, sups = [], []
    for R in R_list:
        best = None
        for xi in xi_list:
            est, se = phi_i_integral(i, R, t, tau, xi, beta, n_points, n_scrambles, seed)
            if est > 0 and not se <= max_rel_se * est:
                raise QuadratureError(f"Phi^({i}) at R={R}, xi={xi}: relative QMC error "
                                      f"{se / est:.3g}; increase n_points", achieved=se / est)
            rows.append({"R": R, "xi": xi, "estimate": est, "stderr": se})
            if best is None or est > best[0]:
                best = (est, se, xi)
        sups.append(best)
    fit = fit_rate([(R, b[0]) for R, b in zip(R_list, sups)])
    bound = -beta + SLACK
    return LemmaCheckResult(f"phi_{i}_bound", {"i": i, "t": t, "tau": tau, "beta": beta,
                                              "xi_list": list(xi_list), "R_list": list(R_list),
                                              "n_points": n_points, "seed": seed},
                            rows, fit.slope, fit.stderr, bound,
                            {"lemma_exponent": -beta,
                             "sup_by_R": {str(R): b[0] for R, b in zip(R_list, sups)},
                             "argmax_xi_by_R": {str(R): b[2] for R, b in zip(R_list, sups)}},
                            fit.slope <= bound)


def run_suite(beta: float = 0.5, t: float = 0.25, seed: int = 0, select=None) -> list[LemmaCheckResult]:
    """The default lemma checks (one result per lemma, two for Phi^(i))."""
    select = list(LEMMAS) if select is None else list(select)
    unknown = set(select) - set(LEMMAS)
    if unknown:
        raise ValueError(f"unknown lemma names {sorted(unknown)}")
    if not select:
        raise ValueError("empty lemma selection")
    out = []
    if "heat_riesz" in select:
        out.append(check_heat_riesz(beta=beta))
    if "qr_riesz" in select:
        out.append(check_qr_riesz(beta=beta))
    if "m_scaling" in select:
        out.append(check_m_scaling(t=t, beta=beta))
    if "E_growth" in select:
        out.append(check_E_growth(t=t, s1=t / 4, s2=t / 8, tau=t / 2, beta=beta, seed=seed))
    if "varphi_pair" in select:
        out.append(check_varphi_pair(t=t, beta=beta))
    if "phi_i_bound" in select:
        for i in (1, 2):
            out.append(check_phi_i_bound(t=t, tau=t / 2, beta=beta, i=i, seed=seed))
    return out
