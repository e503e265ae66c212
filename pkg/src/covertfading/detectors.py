"""Adversary detectors: the likelihood-ratio test, the power detector and the
mean-threshold detector, with Monte Carlo threshold calibration and
error-probability estimation.

All three statistics depend on a slot only through its block energies, so
the Monte Carlo paths draw energies directly (see
:func:`covertfading.model.sample_energies`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import interpolate, special

from .model import Field, Hypothesis, Observation, SystemParams, sample_energies
from .numerics import (DEFAULT_QUADRATURE, QuadratureSpec, exp_mixture_log_integral,
                       laguerre_rule, legendre_rule, reg_gamma_q_inv)
from .parallel import chunk_sizes, stream_id, worker_map

Z95 = 1.959963984540054
MIN_TAIL_COUNT = 50


class DetectorKind(str, Enum):
    LRT = "lrt"
    POWER = "power"
    MEAN_THRESHOLD = "mean_threshold"


class QuantileInfeasibleError(ValueError):
    pass


class FingerprintMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# block log-likelihood ratio


def _log_integrand(u, kappa, s, mu):
    # log of the H1/H0 block density ratio integrand in u = log(1 + a x), a = sa2/s0
    return -kappa * u - s * np.expm1(-u) - mu * np.expm1(u) + np.log(mu) + u


def _peak(kappa, s, mu):
    km = kappa - 1.0
    disc = np.sqrt(km * km + 4.0 * mu * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(km > 0, 2.0 * s / (km + disc), (disc - km) / (2.0 * mu))
    return np.log(np.maximum(y, 1.0))


def _bisect(fun, lo, hi, iters=56):
    # fun(lo) True, fun(hi) False; returns hi-side bracket end
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = fun(mid)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo, hi


def _window(kappa, s, mu, u0, h0, depth):
    target = h0 - depth
    above = lambda u: _log_integrand(u, kappa, s, mu) > target
    # right edge
    step = np.ones_like(u0)
    hi = u0 + step
    for _ in range(200):
        grow = above(hi)
        if not grow.any():
            break
        step = np.where(grow, 2.0 * step, step)
        hi = np.where(grow, u0 + step, hi)
    _, u_hi = _bisect(above, u0.copy(), hi)
    # left edge, only where the integrand at u=0 is still inside the window
    zero = np.zeros_like(u0)
    needs = ~above(zero) & (u0 > 0)
    u_lo = zero
    if needs.any():
        lo_b, _ = _bisect(lambda u: ~above(u), zero, u0.copy())
        u_lo = np.where(needs, lo_b, zero)
    return u_lo, u_hi


def _block_llr_window(kappa, s, mu, spec):
    u0 = _peak(kappa, s, mu)
    h0 = _log_integrand(u0, kappa, s, mu)
    u_lo, u_hi = _window(kappa, s, mu, u0, h0, spec.window_depth)
    nodes, weights = legendre_rule(spec.node_count)
    half = 0.5 * (u_hi - u_lo)
    uu = u_lo[:, None] + half[:, None] * (nodes + 1.0)
    vals = np.exp(_log_integrand(uu, kappa, s[:, None], mu) - h0[:, None])
    return h0 + np.log(half * (vals @ weights))


def _block_llr_laguerre(kappa, s, mu, spec):
    u0 = _peak(kappa, s, mu)
    h0 = _log_integrand(u0, kappa, s, mu)
    u_lo, _ = _window(kappa, s, mu, u0, h0, spec.window_depth)
    e = np.exp(u0)
    d1 = -(kappa - 1.0) + s / e - mu * e
    d2 = -s / e - mu * e
    w = 1.0 / (np.abs(np.minimum(d1, 0.0)) + np.sqrt(-d2))
    t, wt = laguerre_rule(spec.node_count)
    with np.errstate(over="ignore", invalid="ignore"):
        tail = np.exp(_log_integrand(u0[:, None] + w[:, None] * t, kappa, s[:, None], mu)
                      - h0[:, None] + t)
    right = w * (np.where(np.isfinite(tail), tail, 0.0) @ wt)
    nodes, weights = legendre_rule(spec.node_count)
    half = 0.5 * (u0 - u_lo)
    uu = u_lo[:, None] + half[:, None] * (nodes + 1.0)
    left = half * (np.exp(_log_integrand(uu, kappa, s[:, None], mu) - h0[:, None]) @ weights)
    return h0 + np.log(right + left)


def llr_integrand_exponent(S, params: SystemParams):
    """g(x) whose exponential-prior average gives the block likelihood ratio."""
    s0, sa, kappa = params.noise_var, params.alice_power, params.kappa

    def g(x):
        theta = s0 + sa * np.asarray(x, dtype=float)
        return -kappa * np.log(theta / s0) + 0.5 * S * (1.0 / s0 - 1.0 / theta)

    return g


def block_llr(S, params: SystemParams, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """log f1(block) - log f0(block) as a function of the block energy S.

    Vectorized over ``S``. With theta(x) = s0 + sa x this is the log of
    ``E_x[(theta/s0)^-kappa exp(S/2 (1/s0 - 1/theta))]`` for x ~ Exp(rate).
    """
    S_arr = np.asarray(S, dtype=float)
    if np.any(S_arr < 0):
        raise ValueError("block energies must be nonnegative")
    if params.alice_power == 0.0:
        return np.zeros_like(S_arr) if S_arr.ndim else 0.0
    flat = S_arr.reshape(-1)
    a = params.alice_power / params.noise_var
    mu = params.fading_rate / a
    s = flat / (2.0 * params.noise_var)
    if spec.method == "window":
        out = _block_llr_window(params.kappa, s, mu, spec)
    elif spec.method == "laguerre":
        out = _block_llr_laguerre(params.kappa, s, mu, spec)
    else:
        out = np.array([exp_mixture_log_integral(llr_integrand_exponent(v, params),
                                                 params.fading_rate, spec, scale=a)
                        for v in flat])
    out = out.reshape(S_arr.shape)
    return float(out) if out.ndim == 0 else out


class LlrTable:
    """Cubic-spline tabulation of :func:`block_llr` for bulk Monte Carlo use.

    The spline lives on a uniform grid in t = sqrt(S / s_max), so lookup is
    plain indexing; energies beyond ``s_max`` fall back to direct quadrature.
    """

    def __init__(self, params: SystemParams, spec: QuadratureSpec = DEFAULT_QUADRATURE,
                 knots: int = 4097, s_max: float | None = None):
        self.params = params
        self.spec = spec
        if s_max is None:
            s_max = energy_upper_quantile(params, 1e-13)
        self.s_max = float(s_max)
        self.knots = int(knots)
        self._zero = params.alice_power == 0.0
        if not self._zero:
            t = np.linspace(0.0, 1.0, self.knots)
            spline = interpolate.CubicSpline(t, block_llr(self.s_max * t * t, params, spec))
            self._coef = np.ascontiguousarray(spline.c)

    def __call__(self, S):
        S = np.asarray(S, dtype=float)
        if self._zero:
            return np.zeros_like(S)
        cells = self.knots - 1
        x = np.sqrt(S * (1.0 / self.s_max)) * cells
        i = np.minimum(x.astype(np.intp), cells - 1)
        dt = (x - i) * (1.0 / cells)
        c0, c1, c2, c3 = self._coef
        out = ((c0[i] * dt + c1[i]) * dt + c2[i]) * dt + c3[i]
        far = S > self.s_max
        if far.any():
            out[far] = block_llr(S[far], self.params, self.spec)
        return out


def energy_upper_quantile(params: SystemParams, tail: float) -> float:
    """Energy exceeded with probability <~ ``tail`` under either hypothesis."""
    g_hi = special.gammainccinv(params.kappa, tail / 2)
    x_hi = -math.log(tail / 2) / params.fading_rate
    return 2.0 * (params.noise_var + params.alice_power * x_hi) * g_hi


# ---------------------------------------------------------------------------
# statistics


def lrt_statistic(obs: Observation, params: SystemParams,
                  spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Sum of block LLRs; accept H1 iff the statistic exceeds the threshold."""
    return float(np.sum(block_llr(obs.block_energies, params, spec)))


def power_statistic(obs) -> float:
    energies = obs.block_energies if isinstance(obs, Observation) else np.asarray(obs)
    return float(np.sum(energies))


def mean_threshold_statistic(obs, params: SystemParams) -> float:
    energies = obs.block_energies if isinstance(obs, Observation) else np.asarray(obs)
    return float(np.mean(_y_prime(energies, params)))


def _y_prime(energies, params):
    rb = math.sqrt(params.block_len)
    return energies / (2.0 * rb) - rb * params.noise_var


def statistics_from_energies(kind, energies, params: SystemParams, llr=None) -> np.ndarray:
    """Per-slot statistic for a (trials, num_blocks) array of block energies."""
    kind = DetectorKind(kind)
    energies = np.atleast_2d(energies)
    if kind is DetectorKind.POWER:
        return energies.sum(axis=1)
    if kind is DetectorKind.MEAN_THRESHOLD:
        return _y_prime(energies, params).mean(axis=1)
    if llr is None:
        llr = LlrTable(params)
    return llr(energies).sum(axis=1)


def _statistic_evaluator(kind, params, spec):
    return LlrTable(params, spec) if DetectorKind(kind) is DetectorKind.LRT else None


# ---------------------------------------------------------------------------
# calibration and error estimation


@dataclass(frozen=True)
class CalibratedDetector:
    kind: DetectorKind
    threshold: float
    target_pfa: float
    calibration_trials: int
    calibration_seed: str
    params_fingerprint: str

    def decide(self, statistic):
        """True where H1 is accepted (strictly above the threshold)."""
        return np.asarray(statistic) > self.threshold


@dataclass(frozen=True)
class ErrorEstimate:
    p_fa: float
    p_md: float
    p_e: float
    half_width_fa: float
    half_width_md: float
    trials: int


def wilson_half_width(p: float, trials: int, z: float = Z95) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    denom = 1.0 + z * z / trials
    return z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom


def _chunk_statistics(kind, params, hypothesis, size, rng, llr):
    energies = sample_energies(params, hypothesis, size, rng)
    return statistics_from_energies(kind, energies, params, llr)


def _chunk_exceedances(kind, params, hypothesis, size, rng, llr, threshold):
    stats = _chunk_statistics(kind, params, hypothesis, size, rng, llr)
    return int(np.count_nonzero(stats > threshold))


def simulate_statistics(kind, params: SystemParams, hypothesis, trials: int,
                        rng: np.random.Generator, spec: QuadratureSpec = DEFAULT_QUADRATURE,
                        workers: int = 1, llr=None) -> np.ndarray:
    """Statistic of ``trials`` independent slots under ``hypothesis``."""
    kind = DetectorKind(kind)
    if llr is None:
        llr = _statistic_evaluator(kind, params, spec)
    sizes = chunk_sizes(trials, params.num_blocks)
    streams = rng.spawn(len(sizes))
    jobs = [(kind, params, hypothesis, size, r, llr) for size, r in zip(sizes, streams)]
    parts = worker_map(_chunk_statistics, jobs, workers)
    return np.concatenate(parts) if parts else np.empty(0)


def upper_quantile_threshold(stats, target_pfa: float) -> float:
    """Smallest order statistic with at most floor(N p) values strictly above it."""
    stats = np.sort(np.asarray(stats, dtype=float))
    allowed = int(math.floor(len(stats) * target_pfa + 1e-9))
    return float(stats[len(stats) - allowed - 1])


def calibrate(kind, params: SystemParams, target_pfa: float, trials: int,
              rng: np.random.Generator, spec: QuadratureSpec = DEFAULT_QUADRATURE,
              workers: int = 1, llr=None) -> CalibratedDetector:
    """Set the threshold at the empirical (1 - target_pfa) quantile under H0."""
    kind = DetectorKind(kind)
    if not 0 < target_pfa < 1:
        raise ValueError("target_pfa must lie in (0, 1)")
    if trials * target_pfa < MIN_TAIL_COUNT:
        raise QuantileInfeasibleError(
            f"trials * target_pfa = {trials * target_pfa:g} < {MIN_TAIL_COUNT}; "
            "the tail quantile cannot be estimated")
    seed = stream_id(rng)
    stats = simulate_statistics(kind, params, Hypothesis.H0, trials, rng, spec, workers, llr)
    return CalibratedDetector(kind, upper_quantile_threshold(stats, target_pfa), float(target_pfa),
                              int(trials), seed, params.fingerprint())


def pd_threshold_analytic(params: SystemParams, target_pfa: float) -> float:
    """Exact H0 power-detector threshold: total energy is 2 s0 Gamma(n kappa / B)."""
    if not 0 < target_pfa < 1:
        raise ValueError("target_pfa must lie in (0, 1)")
    shape = params.n if params.field is Field.COMPLEX else params.n / 2.0
    return 2.0 * params.noise_var * reg_gamma_q_inv(shape, target_pfa)


def estimate_errors(det: CalibratedDetector, params: SystemParams, trials: int,
                    rng: np.random.Generator, spec: QuadratureSpec = DEFAULT_QUADRATURE,
                    workers: int = 1, llr=None) -> ErrorEstimate:
    """P_FA from fresh H0 slots and P_MD from fresh H1 slots."""
    if det.params_fingerprint != params.fingerprint():
        raise FingerprintMismatchError(
            "detector was calibrated for different parameters "
            f"({det.params_fingerprint} != {params.fingerprint()})")
    if llr is None:
        llr = _statistic_evaluator(det.kind, params, spec)
    h0_rng, h1_rng = rng.spawn(2)
    sizes = chunk_sizes(trials, params.num_blocks)
    jobs = []
    for hyp, stream in ((Hypothesis.H0, h0_rng), (Hypothesis.H1, h1_rng)):
        for size, r in zip(sizes, stream.spawn(len(sizes))):
            jobs.append((det.kind, params, hyp, size, r, llr, det.threshold))
    counts = worker_map(_chunk_exceedances, jobs, workers)
    half = len(sizes)
    false_alarms = sum(counts[:half])
    detections = sum(counts[half:])
    p_fa = false_alarms / trials
    p_md = 1.0 - detections / trials
    return ErrorEstimate(p_fa, p_md, p_fa + p_md, wilson_half_width(p_fa, trials),
                         wilson_half_width(p_md, trials), int(trials))
