"""Special functions and quadrature used by the likelihoods and bounds.

Only what the package needs: the exponential integral, the upper regularized
incomplete gamma function and its inverse, log-sum-exp, and integration of
``exp(g(x))`` against an exponential prior.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize, special

EULER_GAMMA = 0.57721566490153286060651209008240243
_EPS = np.finfo(float).eps
_TINY = 1e-300
# |x| at which Ei switches from the power series to the continued fraction
EI_SWITCH = 6.0
_ASYMPTOTIC_SWITCH = 40.0

METHODS = ("window", "laguerre", "adaptive")


class QuadratureError(ArithmeticError):
    """Raised when an integral fails to converge; ``info`` holds diagnostics."""

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate against the exponential fading prior.

    ``window`` applies one Gauss-Legendre rule of ``node_count`` nodes on the
    region where the log-integrand (in u = log(1 + c x)) lies within
    ``window_depth`` nats of its peak. ``laguerre`` uses Gauss-Laguerre on the
    tail beyond the peak and Gauss-Legendre before it. ``adaptive`` hands the
    recentred integrand to QUADPACK.
    """

    method: str = "window"
    node_count: int = 64
    rel_tol: float = 1e-12
    abs_tol: float = 1e-300
    max_subdivisions: int = 200
    window_depth: float = 60.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown quadrature method {self.method!r}; expected one of {METHODS}")
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")
        if self.window_depth <= 0:
            raise ValueError("window_depth must be positive")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(self.method, 2 * self.node_count, self.rel_tol, self.abs_tol,
                              self.max_subdivisions, self.window_depth)


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=None)
def legendre_rule(n: int):
    nodes, weights = leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=None)
def laguerre_rule(n: int):
    nodes, weights = laggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


# ---------------------------------------------------------------------------
# exponential integral


def _e1_series(t: float) -> float:
    # E1(t) = -gamma - ln t - sum_{k>=1} (-t)^k / (k k!)
    total = 0.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= -t / k
        contrib = term / k
        total += contrib
        if abs(contrib) <= _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(t) - total


def _e1_scaled_cf(t: float) -> float:
    """e^t E1(t) by modified Lentz evaluation of the continued fraction."""
    b = t + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            return h
    raise QuadratureError("continued fraction for E1 did not converge", t=t)


def e1_scaled(t: float) -> float:
    """Return ``exp(t) * E1(t)`` for ``t > 0`` without overflow."""
    t = float(t)
    if not t > 0:
        raise ValueError(f"e1_scaled requires t > 0, got {t}")
    if t <= EI_SWITCH:
        return math.exp(t) * _e1_series(t)
    return _e1_scaled_cf(t)


def _ei_positive(x: float) -> float:
    if x <= _ASYMPTOTIC_SWITCH:
        total = 0.0
        term = 1.0
        k = 0
        while True:
            k += 1
            term *= x / k
            contrib = term / k
            total += contrib
            if contrib <= _EPS * total:
                break
        return EULER_GAMMA + math.log(x) + total
    # asymptotic: Ei(x) ~ e^x / x * sum k! / x^k
    total = 1.0
    term = 1.0
    for k in range(1, 60):
        prev = term
        term *= k / x
        if term > prev:
            break
        total += term
        if term <= _EPS * total:
            break
    return math.exp(x) / x * total


def ei(x: float) -> float:
    """Exponential integral Ei(x) = -int_{-x}^inf e^{-t}/t dt (principal value for x > 0).

    Negative arguments use the power series for |x| <= 6 and the continued
    fraction for E1 beyond, since Ei(-t) = -E1(t).
    """
    x = float(x)
    if x == 0.0:
        raise ValueError("Ei has a logarithmic singularity at 0")
    if math.isnan(x):
        return math.nan
    if x < 0:
        t = -x
        if t <= EI_SWITCH:
            return -_e1_series(t)
        return -math.exp(-t) * _e1_scaled_cf(t)
    return _ei_positive(x)


def log_int_identity(c: float, lam: float) -> float:
    """Closed form of ``int_0^inf log(1 + c x) lam e^{-lam x} dx``.

    Equals ``-exp(lam/c) Ei(-lam/c)``; evaluated as the scaled E1 so large
    ``lam/c`` neither overflows nor loses the leading digits.
    """
    if not (c > 0 and lam > 0):
        raise ValueError("log_int_identity requires c > 0 and lam > 0")
    r = lam / c
    if math.isinf(r):
        return 0.0
    return e1_scaled(r)


# ---------------------------------------------------------------------------
# incomplete gamma


def reg_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x)."""
    if not a > 0:
        raise ValueError(f"reg_gamma_q requires a > 0, got {a}")
    if not x >= 0:
        raise ValueError(f"reg_gamma_q requires x >= 0, got {x}")
    return float(special.gammaincc(a, x))


def reg_gamma_q_inv(a: float, q: float, tol: float = 1e-13) -> float:
    """Inverse in x of Q(a, x) = q.

    Starts from the Cephes estimate, brackets the root and polishes with
    safeguarded Newton steps on Q(a, x) - q.
    """
    if not a > 0:
        raise ValueError(f"reg_gamma_q_inv requires a > 0, got {a}")
    if not 0 < q < 1:
        raise ValueError(f"reg_gamma_q_inv requires 0 < q < 1, got {q}")
    x = float(special.gammainccinv(a, q))
    lo, hi = 0.0, max(2.0 * x, a + 50.0 * math.sqrt(a) + 50.0)
    while special.gammaincc(a, hi) > q:
        hi *= 2.0
    log_norm = special.gammaln(a)
    for _ in range(100):
        f = special.gammaincc(a, x) - q
        if abs(f) <= tol * q:
            break
        if f > 0:
            lo = x
        else:
            hi = x
        # dQ/dx = -x^{a-1} e^{-x} / Gamma(a)
        dens = math.exp((a - 1.0) * math.log(x) - x - log_norm) if x > 0 else 0.0
        step = f / dens if dens > 0 else math.inf
        cand = x + step
        x = cand if lo < cand < hi else 0.5 * (lo + hi)
    return x


# ---------------------------------------------------------------------------
# log-space helpers


def logsumexp(a, axis=None, b=None):
    """Thin wrapper over scipy's log-sum-exp (weights ``b`` optional)."""
    return special.logsumexp(a, axis=axis, b=b)


def _second_diff(fun, u, h):
    return (fun(u + h) - 2.0 * fun(u) + fun(u - h)) / (h * h)


def _find_peak(H: Callable[[float], float], u_max: float = 60.0):
    """Maximize a unimodal H on [0, u_max]; returns (u*, H(u*))."""
    grid = np.linspace(0.0, u_max, 481)
    with np.errstate(all="ignore"):
        vals = np.array([H(u) for u in grid])
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    i = int(np.argmax(vals))
    if not np.isfinite(vals[i]):
        raise QuadratureError("integrand is nowhere finite", grid_max=u_max)
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda u: -H(u), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    u_star = float(res.x)
    h_star = float(H(u_star))
    if vals[i] > h_star:
        u_star, h_star = float(grid[i]), float(vals[i])
    if H(0.0) >= h_star:
        u_star, h_star = 0.0, float(H(0.0))
    return u_star, h_star


def _drop_point(H, u_from, h_star, depth, direction, lower=0.0):
    """Point where H falls ``depth`` below ``h_star`` moving away from the peak."""
    target = h_star - depth
    f = lambda u: H(u) - target
    if direction < 0:
        if u_from <= lower or f(lower) >= 0:
            return lower
        return optimize.brentq(f, lower, u_from, xtol=1e-14)
    step = 1.0
    hi = u_from + step
    with np.errstate(all="ignore"):
        # nan (inf - inf) counts as not yet decayed
        while not f(hi) <= 0:
            step *= 2.0
            hi = u_from + step
            if step > 1e4:
                raise QuadratureError("integrand does not decay", u_from=u_from, h_star=h_star)
    return optimize.brentq(f, u_from, hi, xtol=1e-14)


def exp_mixture_log_integral(g: Callable[[float], float], lam: float,
                             spec: QuadratureSpec = DEFAULT_QUADRATURE,
                             scale: float | None = None) -> float:
    """Return ``log int_0^inf exp(g(x)) lam exp(-lam x) dx``.

    The integral is taken in u = log(1 + scale x) (``scale`` defaults to
    ``lam``), which turns the likelihood integrands of this package into
    log-concave bumps. ``g`` must be vectorizable over numpy arrays and the
    transformed log-integrand must be unimodal.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    c = float(lam if scale is None else scale)
    if not c > 0:
        raise ValueError("scale must be positive")

    def H(u):
        x = np.expm1(u) / c
        return g(x) - lam * x + np.log(lam / c) + u

    u_star, h_star = _find_peak(lambda u: float(H(u)))
    if not np.isfinite(h_star):
        raise QuadratureError("peak of the integrand is not finite", u_star=u_star)
    depth = spec.window_depth
    u_lo = _drop_point(lambda u: float(H(u)), u_star, h_star, depth, -1)
    u_hi = _drop_point(lambda u: float(H(u)), u_star, h_star, depth, +1)

    if spec.method == "window":
        nodes, weights = legendre_rule(spec.node_count)
        half = 0.5 * (u_hi - u_lo)
        uu = u_lo + half * (nodes + 1.0)
        total = half * np.sum(weights * np.exp(H(uu) - h_star))
    elif spec.method == "laguerre":
        total = _laguerre_pieces(H, u_star, h_star, u_lo, spec.node_count)
    else:
        total = 0.0
        f = lambda u: math.exp(float(H(u)) - h_star)
        for a, b in ((u_lo, u_star), (u_star, u_hi)):
            if b <= a:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("error", integrate.IntegrationWarning)
                try:
                    val, err = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                              limit=spec.max_subdivisions)
                except integrate.IntegrationWarning as exc:
                    raise QuadratureError(f"adaptive quadrature failed: {exc}", a=a, b=b,
                                          u_star=u_star, h_star=h_star) from exc
            total += val
    if not total > 0:
        raise QuadratureError("integral vanished", u_star=u_star, h_star=h_star)
    return float(h_star + math.log(total))


def _laguerre_pieces(H, u_star, h_star, u_lo, n):
    # width from slope and curvature at the peak
    h = 1e-4
    d1 = (float(H(u_star + h)) - float(H(u_star))) / h if u_star == 0.0 else 0.0
    d2 = _second_diff(lambda u: float(H(u)), max(u_star, h), h)
    w = 1.0 / (abs(min(d1, 0.0)) + math.sqrt(max(-d2, 0.0)) + _TINY)
    t, wt = laguerre_rule(n)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(H(u_star + w * t) - h_star + t)
    right = w * np.sum(wt * np.where(np.isfinite(vals), vals, 0.0))
    left = 0.0
    if u_star > u_lo:
        nodes, weights = legendre_rule(n)
        half = 0.5 * (u_star - u_lo)
        left = half * np.sum(weights * np.exp(H(u_lo + half * (nodes + 1.0)) - h_star))
    return right + left
