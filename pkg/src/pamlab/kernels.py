"""Heat kernel, Riesz kernel cell integrals and shared Fourier-side integrals.

Fourier convention used throughout the package::

    f_hat(xi) = int f(x) exp(-i x.xi) dx,   f(x) = (2 pi)^-d int f_hat(xi) exp(i x.xi) dxi

so that ``p_t`` has transform ``exp(-t |xi|^2 / 2)`` and ``|x|^-beta`` has
transform ``riesz_fourier_constant(d, beta) * |xi|^(beta - d)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc


class DomainError(ValueError):
    """Parameters outside the range where a quantity is defined."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class ModelParams:
    """Dimension, Riesz exponent and time horizon; the initial condition is u0 = 1."""

    d: int
    beta: float
    t: float

    def __post_init__(self):
        check_beta(self.d, self.beta)
        if not self.t > 0:
            raise DomainError(f"time horizon must be positive, got t={self.t}")


def check_beta(d: int, beta: float) -> None:
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got d={d}")
    if not 0.0 < beta < min(2.0, d):
        raise DomainError(f"need 0 < beta < min(2, d); got beta={beta}, d={d}")


# ---------------------------------------------------------------------------
# heat kernel


def heat_kernel(tau, x, d: int = 1):
    """Gaussian density ``p_tau(x) = (2 pi tau)^(-d/2) exp(-|x|^2 / (2 tau))``.

    For ``d == 1`` *x* may be any array of points; for ``d > 1`` the last axis
    of *x* holds the coordinates.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("heat kernel needs tau > 0")
    x = np.asarray(x, dtype=float)
    if d == 1:
        r2 = x * x
    else:
        if x.shape[-1] != d:
            raise ValueError(f"last axis of x must have length d={d}")
        r2 = np.sum(x * x, axis=-1)
    return np.exp(-r2 / (2.0 * tau)) / (2.0 * np.pi * tau) ** (d / 2.0)


def heat_riesz(x, v, beta: float, d: int = 1):
    """Closed form of ``int p_v(x - y) |y|^-beta dy``.

    This is ``E|x + sqrt(v) Z|^-beta`` for a standard Gaussian Z in R^d, a
    non-central absolute moment::

        (2v)^(-beta/2) Gamma((d-beta)/2) / Gamma(d/2) * 1F1(beta/2; d/2; -|x|^2/(2v))

    Defined for ``0 < beta < d``.  *x* follows the layout of `heat_kernel`.
    """
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if d == 1 else np.sqrt(np.sum(x * x, axis=-1))
    return heat_riesz_radial(r, v, beta, d)


def heat_riesz_radial(r, v, beta: float, d: int = 1):
    """`heat_riesz` as a function of the distance ``r = |x|``."""
    if not 0.0 < beta < d:
        raise DomainError(f"heat_riesz needs 0 < beta < d; got beta={beta}, d={d}")
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    pref = special.gamma((d - beta) / 2.0) / special.gamma(d / 2.0)
    return pref * (2.0 * v) ** (-beta / 2.0) * special.hyp1f1(beta / 2.0, d / 2.0, -r * r / (2.0 * v))


# ---------------------------------------------------------------------------
# Riesz cell integrals


def _g_antiderivative(u, beta):
    return np.abs(u) ** (2.0 - beta) / ((1.0 - beta) * (2.0 - beta))


def riesz_cell_integral(a, h: float, beta: float):
    """Exact ``int_0^h int_0^h |x - y + a|^-beta dx dy`` in one dimension.

    *a* is a (possibly array-valued) nonnegative offset, normally ``m * h``.
    Uses the second difference ``G(a+h) - 2G(a) + G(a-h)`` of
    ``G(u) = |u|^(2-beta) / ((1-beta)(2-beta))``; for ``a >= h`` it is
    evaluated in a cancellation-resistant ``expm1/log1p`` form.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"one-dimensional cell integrals need 0 < beta < 1, got {beta}")
    if not h > 0:
        raise DomainError("cell width must be positive")
    a = np.abs(np.asarray(a, dtype=float))
    p = 2.0 - beta
    out = np.empty_like(a)
    near = a < h
    if np.any(near):
        an = a[near]
        out[near] = (
            _g_antiderivative(an + h, beta)
            - 2.0 * _g_antiderivative(an, beta)
            + _g_antiderivative(an - h, beta)
        )
    far = ~near
    if np.any(far):
        af = a[far]
        r = h / af
        with np.errstate(divide="ignore"):
            bracket = np.expm1(p * np.log1p(r)) + np.expm1(p * np.log1p(-r))
        out[far] = _g_antiderivative(af, beta) * bracket
    return out if out.ndim else float(out)


def _gauss_jacobi_radial(n: int, beta: float):
    # nodes/weights for int_0^1 rho^(1-beta) f(rho) d rho
    x, w = special.roots_jacobi(n, 0.0, 1.0 - beta)
    rho = 0.5 * (x + 1.0)
    return rho, w * 0.5 ** (2.0 - beta)


def _corner_rect_integral(f, A: float, B: float, beta: float, n: int = 24):
    """int_0^A int_0^B f(v1, v2) |v|^-beta dv2 dv1 with the singularity at the origin.

    Duffy split along the diagonal; each triangle becomes a smooth integrand
    in (rho, w) after the radial weight rho^(1-beta) is absorbed into a
    Gauss-Jacobi rule.
    """
    rho, wr = _gauss_jacobi_radial(n, beta)
    xg, wg = np.polynomial.legendre.leggauss(n)
    w01 = 0.5 * (xg + 1.0)
    ww = 0.5 * wg
    P, W = np.meshgrid(rho, w01, indexing="ij")
    WT = np.outer(wr, ww)
    total = 0.0
    # triangle v2 <= (B/A) v1
    k = B / A
    v1 = A * P
    v2 = k * A * P * W
    jac = A ** (2.0 - beta) * k * (1.0 + (k * W) ** 2) ** (-beta / 2.0)
    total += np.sum(WT * jac * f(v1, v2))
    # triangle v1 <= (A/B) v2
    k = A / B
    v2 = B * P
    v1 = k * B * P * W
    jac = B ** (2.0 - beta) * k * (1.0 + (k * W) ** 2) ** (-beta / 2.0)
    total += np.sum(WT * jac * f(v1, v2))
    return float(total)


def _plain_rect_integral(f, x0, x1, y0, y1, beta, n=24):
    xg, wg = np.polynomial.legendre.leggauss(n)
    xs = 0.5 * (x1 - x0) * (xg + 1.0) + x0
    ys = 0.5 * (y1 - y0) * (xg + 1.0) + y0
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = f(X, Y) * (X * X + Y * Y) ** (-beta / 2.0)
    return float(0.25 * (x1 - x0) * (y1 - y0) * wg @ vals @ wg)


def riesz_cell_integral_2d(offset, h: float, beta: float, n: int = 24) -> float:
    """``int_cell int_{cell + offset*h} |x - y|^-beta dx dy`` for square cells in 2-d.

    Reduces to ``int_{[-h,h]^2} (h-|u1|)(h-|u2|) |u + a|^-beta du`` with
    ``a = offset * h``, split on the tent kinks and the singular lattice point;
    rectangles touching the singularity use a Duffy/Gauss-Jacobi rule, the
    others tensor Gauss-Legendre.
    """
    if not 0.0 < beta < 2.0:
        raise DomainError(f"two-dimensional cell integrals need 0 < beta < 2, got {beta}")
    a = np.asarray(offset, dtype=float) * h
    # work in v = u + a, singular at v = 0; tent centred at a
    def tent(v1, v2):
        return np.clip(h - np.abs(v1 - a[0]), 0, None) * np.clip(h - np.abs(v2 - a[1]), 0, None)

    bx = sorted({a[0] - h, a[0], a[0] + h} | ({0.0} if abs(a[0]) < h else set()))
    by = sorted({a[1] - h, a[1], a[1] + h} | ({0.0} if abs(a[1]) < h else set()))
    total = 0.0
    for x0, x1 in zip(bx[:-1], bx[1:]):
        for y0, y1 in zip(by[:-1], by[1:]):
            corner = None
            for cx in (x0, x1):
                for cy in (y0, y1):
                    if abs(cx) < 1e-12 * h and abs(cy) < 1e-12 * h:
                        corner = (cx, cy)
            if corner is None:
                total += _plain_rect_integral(tent, x0, x1, y0, y1, beta, n)
                continue
            # reflect so the singular corner is the origin and the rectangle is positive
            sx = 1.0 if corner[0] == x0 else -1.0
            sy = 1.0 if corner[1] == y0 else -1.0
            A, B = x1 - x0, y1 - y0
            total += _corner_rect_integral(lambda p, q: tent(sx * p, sy * q), A, B, beta, n)
    return total


@dataclass(frozen=True)
class RieszCellTable:
    """Exact cell-pair integrals of |x-y|^-beta indexed by nonnegative offset (d = 1)."""

    h: float
    beta: float
    entries: np.ndarray

    def __getitem__(self, m):
        return self.entries[np.abs(m)]


def riesz_cell_table(n_offsets: int, h: float, beta: float) -> RieszCellTable:
    entries = riesz_cell_integral(np.arange(n_offsets) * h, h, beta)
    return RieszCellTable(h=h, beta=beta, entries=np.atleast_1d(entries))


# ---------------------------------------------------------------------------
# k_beta


def kbeta_closed_form(beta: float) -> float:
    """``2^(3-beta) / ((1-beta)(2-beta))``, the d = 1 value of k_beta."""
    check_beta(1, beta)
    return 2.0 ** (3.0 - beta) / ((1.0 - beta) * (2.0 - beta))


def kbeta(d: int, beta: float) -> float:
    """``k_beta = int_{Q_1^2} |x1 - x2|^-beta dx1 dx2`` with ``Q_1 = [-1, 1]^d``.

    Computed by quadrature of the tent-weighted kernel
    ``int_{[-2,2]^d} prod_j (2 - |u_j|) |u|^-beta du``: algebraic-weight
    adaptive quadrature for d = 1, the Duffy/Gauss-Jacobi rule for d = 2.
    """
    check_beta(d, beta)
    if d == 1:
        val, err = integrate.quad(lambda u: 2.0 - u, 0.0, 2.0, weight="alg", wvar=(-beta, 0.0),
                                  epsabs=0.0, epsrel=1e-13)
        return 2.0 * val
    if d == 2:
        return riesz_cell_integral_2d((0, 0), 2.0, beta, n=32)
    raise DomainError("kbeta quadrature implemented for d in {1, 2}")


def kbeta_qmc(d: int, beta: float, n_points: int = 2**16, n_scrambles: int = 16,
              seed: int = 0) -> tuple[float, float]:
    """Randomised-QMC estimate of k_beta with its standard error.

    Polar substitution ``r = s^(1/(d-beta))`` removes the |u|^-beta
    singularity, leaving a bounded integrand over (s, direction).
    """
    check_beta(d, beta)
    rmax = 2.0 * math.sqrt(d)
    smax = rmax ** (d - beta)
    means = []
    for k in range(n_scrambles):
        sob = qmc.Sobol(d, scramble=True, bits=64, seed=np.random.default_rng([seed, k]))
        pts = sob.random(n_points)
        r = (pts[:, 0] * smax) ** (1.0 / (d - beta))
        if d == 1:
            omega = np.where(pts[:, 0:1] >= 0, 1.0, 1.0)  # both signs handled by symmetry
            surface = 2.0
        elif d == 2:
            th = 2.0 * np.pi * pts[:, 1]
            omega = np.stack([np.cos(th), np.sin(th)], axis=1)
            surface = 2.0 * np.pi
        else:
            raise DomainError("kbeta_qmc implemented for d in {1, 2}")
        u = r[:, None] * omega
        tent = np.prod(np.clip(2.0 - np.abs(u), 0.0, None), axis=1)
        means.append(surface * smax / (d - beta) * tent.mean())
    means = np.asarray(means)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_scrambles))


# ---------------------------------------------------------------------------
# Fourier side


def riesz_fourier_constant(d: int, beta: float) -> float:
    """c such that the transform of |x|^-beta is ``c |xi|^(beta-d)``.

    ``c = 2^(d-beta) pi^(d/2) Gamma((d-beta)/2) / Gamma(beta/2)``.
    """
    if not 0.0 < beta < d:
        raise DomainError(f"Riesz transform constant needs 0 < beta < d; got beta={beta}, d={d}")
    return float(
        2.0 ** (d - beta) * math.pi ** (d / 2.0)
        * special.gamma((d - beta) / 2.0) / special.gamma(beta / 2.0)
    )


def _profile(kind: str, a: float):
    if kind == "one":
        return lambda q: np.ones_like(q)
    if kind == "exp":
        return lambda q: np.exp(-a * q)
    if kind == "g":
        # (1 - exp(-a q)) / (a q), -> 1 as a q -> 0
        def g(q):
            x = a * np.asarray(q, dtype=float)
            small = x < 1e-8
            out = np.empty_like(x)
            out[small] = 1.0 - 0.5 * x[small]
            xs = x[~small]
            out[~small] = -np.expm1(-xs) / xs
            return out
        return g
    raise ValueError(f"unknown profile {kind!r}")


def _quad(f, lo, hi, epsrel, epsabs=0.0, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=400, **kw)
        except integrate.IntegrationWarning as exc:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=400, **kw)
            if not abs(err) <= 10.0 * epsrel * abs(val):
                raise QuadratureError(f"quadrature failed on [{lo}, {hi}]: {exc}",
                                      achieved=abs(err / val) if val else float("inf")) from None
    return val, err


def _sinc2_line(beta_exp: float, w, epsrel: float) -> float:
    """int_0^inf sinc^2(x) w(x^2) x^beta_exp dx for a smooth, slowly varying w."""
    scal = lambda x: float(w(np.asarray(x * x, dtype=float)))
    head, _ = _quad(lambda x: np.sinc(x / np.pi) ** 2 * scal(x), 0.0, 1.0, epsrel,
                    weight="alg", wvar=(beta_exp, 0.0))
    # sin^2 x = (1 - cos 2x) / 2 on the tail
    smooth = lambda x: 0.5 * scal(x) * x ** (beta_exp - 2.0)
    tail1, _ = _quad(smooth, 1.0, np.inf, epsrel)
    # Fourier-weighted infinite ranges only accept an absolute tolerance
    tail2, _ = _quad(smooth, 1.0, np.inf, epsrel, epsabs=1e-2 * epsrel * abs(head),
                     weight="cos", wvar=2.0)
    return head + tail1 - tail2


def sinc2_riesz_integral(beta: float, d: int = 1, profile: str = "one", a: float = 0.0,
                         epsrel: float = 1e-9) -> float:
    """``int_{R^d} prod_j sinc^2(eta_j) w(|eta|^2) |eta|^(beta-d) d eta`` (d = 1).

    ``sinc(x) = sin(x)/x``.  The weight profile is one of

    ``"one"``  w = 1
    ``"exp"``  w(q) = exp(-a q)
    ``"g"``    w(q) = (1 - exp(-a q)) / (a q)

    These cover k_beta, the first-chaos variance, the phi-pair integral and
    the m-lemma integral, all of which are this quantity times explicit
    powers of R and t.
    """
    if not 0.0 < beta < d:
        raise DomainError(f"need 0 < beta < d; got beta={beta}, d={d}")
    if d != 1:
        raise DomainError("the Fourier-side route is implemented for d = 1; use box_pair_integral for d = 2")
    return 2.0 * _sinc2_line(beta - 1.0, _profile(profile, a), epsrel)


@lru_cache(maxsize=None)
def sinc2_riesz_limit(beta: float) -> float:
    """Closed form of ``sinc2_riesz_integral(beta, 1, "one")``.

    Follows from ``k_beta = (2 pi)^-1 c_{1,beta} 4 * integral``.
    """
    check_beta(1, beta)
    return (2.0 * math.pi) * kbeta_closed_form(beta) / (4.0 * riesz_fourier_constant(1, beta))


# ---------------------------------------------------------------------------
# real-space box-pair integrals


def _graded_nodes(lo: float, hi: float, n: int = 16, levels: int = 40, ratio: float = 0.5,
                  singular_exponent: float = 0.0):
    """Composite Gauss-Legendre nodes on [lo, hi] geometrically refined towards lo.

    The innermost cell ``[lo, lo + (hi-lo) ratio^levels]`` gets a Gauss-Jacobi
    rule exact for ``(x - lo)^-singular_exponent`` times a polynomial.
    """
    xg, wg = np.polynomial.legendre.leggauss(n)
    edges = (lo + (hi - lo) * ratio ** np.arange(levels + 1))[::-1]
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (b - a)[:, None] * (xg + 1.0) + a[:, None]).ravel()
    weights = (0.5 * (b - a)[:, None] * wg).ravel()
    eps = edges[0] - lo
    xj, wj = special.roots_jacobi(n, 0.0, -singular_exponent)
    rj = 0.5 * (xj + 1.0)
    # int_0^eps f = eps * int_0^1 f(eps r) dr, with weight r^-s moved onto the rule
    inner_nodes = lo + eps * rj
    inner_weights = eps * 0.5 ** (1.0 - singular_exponent) * wj * rj ** singular_exponent
    return np.concatenate([inner_nodes, nodes]), np.concatenate([inner_weights, weights])


def box_pair_integral(R: float, d: int, kernel, singular_exponent: float = 0.0) -> float:
    """``int_{Q_R} int_{Q_R} K(|x1 - x2|) dx1 dx2`` for a radial kernel K.

    *kernel* is a vectorised function of the separation.  K may carry an
    integrable singularity at 0; the radial variable is graded geometrically
    towards the origin, and the innermost cell uses a Gauss-Jacobi rule for
    ``K(r) ~ r^-singular_exponent``.  d = 1 uses the tent form
    ``2 int_0^{2R} (2R - u) K(u) du``; d = 2 a Duffy split of each quadrant.
    """
    L = 2.0 * R
    rho, wr = _graded_nodes(0.0, L, singular_exponent=singular_exponent - (d - 1))
    if d == 1:
        return float(2.0 * np.sum(wr * (L - rho) * kernel(rho)))
    if d == 2:
        xg, wg = np.polynomial.legendre.leggauss(24)
        w = 0.5 * (xg + 1.0)
        ww = 0.5 * wg
        P, W = np.meshgrid(rho, w, indexing="ij")
        WT = np.outer(wr, ww)
        vals = P * (L - P) * (L - P * W) * kernel(P * np.sqrt(1.0 + W * W))
        return float(8.0 * np.sum(WT * vals))
    raise DomainError("box_pair_integral implemented for d in {1, 2}")


def heat_riesz_time_integral(r, T: float, beta: float, d: int, scale: float = 2.0):
    """``int_0^T heat_riesz(r, scale * s) ds`` evaluated on an array of separations."""
    # heat_riesz(0, v) ~ v^(-beta/2): the s -> 0 end carries that weight
    s, ws = _graded_nodes(0.0, T, n=12, levels=36, singular_exponent=beta / 2.0)
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    out = np.empty_like(flat)
    for lo in range(0, flat.size, 4096):
        chunk = flat[lo:lo + 4096]
        out[lo:lo + 4096] = heat_riesz_radial(chunk[:, None], scale * s[None, :], beta, d) @ ws
    return out.reshape(r.shape)
