"""Divergence bounds, the sum-of-errors floor, and the converse moment formulas.

Per-block divergences are the primary quantities; whole-slot figures are
``num_blocks`` times the per-block value because blocks are independent.
Bounds are written with kappa = B (complex samples) or B/2 (real samples),
since a real Gaussian sample carries half the divergence of a complex one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .detectors import LlrTable
from .model import Field, Hypothesis, SystemParams, sample_energies
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, log_int_identity


class Direction(str, Enum):
    F1_F0 = "f1_f0"
    F0_F1 = "f0_f1"


class UnsupportedConfigurationError(ValueError):
    pass


def _power_ratio(params: SystemParams) -> float:
    # r = lambda s0 / sa
    return params.fading_rate * params.noise_var / params.alice_power


def kl_bound_ei(params: SystemParams, whole_slot: bool = False) -> float:
    """Upper bound on D(f1 || f0) per block from the convexity step:
    kappa (e^r Ei(-r) + 1/r) with r = lambda s0 / sa."""
    if params.alice_power == 0.0:
        return 0.0
    r = _power_ratio(params)
    per_block = params.kappa * _ei_gap(r)
    return per_block * params.num_blocks if whole_slot else per_block


def _ei_gap(r: float) -> float:
    """1/r + e^r Ei(-r), i.e. 1/r - e^r E1(r)."""
    if r < 50.0:
        # e^r Ei(-r) = -log_int_identity(c, lambda) with lambda / c = r
        return max(1.0 / r - log_int_identity(1.0, r), 0.0)
    # asymptotic series sum_{k>=1} (-1)^{k+1} k! / r^{k+1}, free of cancellation
    total, term = 0.0, 1.0 / r
    for k in range(1, 40):
        term *= k / r
        total += term if k % 2 else -term
        if term < 1e-17 * total:
            break
    return total


def kl_bound_simple(params: SystemParams, whole_slot: bool = False) -> float:
    """Quadratic closed form kappa sa^2 / (2 lambda^2 s0^2), half of :func:`kl_bound_quartic`.

    Falls below :func:`kl_bound_ei` once r = lambda s0 / sa exceeds about 1.6,
    so there it no longer follows from the convexity bound.
    """
    per_block = params.kappa * params.alice_power ** 2 / (
        2.0 * params.fading_rate ** 2 * params.noise_var ** 2)
    return per_block * params.num_blocks if whole_slot else per_block


def kl_bound_quartic(params: SystemParams, whole_slot: bool = False) -> float:
    """End of the inequality chain with log(1+y) >= y - y^2/2 applied exactly:
    kappa / r^2 = kappa sa^2 / (lambda^2 s0^2). Always dominates :func:`kl_bound_ei`."""
    per_block = 2.0 * kl_bound_simple(params)
    return per_block * params.num_blocks if whole_slot else per_block


def pe_floor(d: float) -> float:
    """Smallest possible P_FA + P_MD given divergence ``d`` between the hypotheses."""
    if d < 0:
        raise ValueError("divergence must be nonnegative")
    return max(0.0, 1.0 - math.sqrt(d / 2.0))


def kl_mc(params: SystemParams, direction, samples: int, rng: np.random.Generator,
          spec: QuadratureSpec = DEFAULT_QUADRATURE, llr=None) -> tuple[float, float]:
    """Monte Carlo per-block divergence and its standard error.

    Blocks are drawn from the numerator density and the block LLR is
    averaged (negated for ``f0_f1``).
    """
    direction = Direction(direction)
    if samples < 10_000:
        raise ValueError("kl_mc needs at least 1e4 samples")
    if params.alice_power == 0.0:
        return 0.0, 0.0
    if llr is None:
        llr = LlrTable(params, spec)
    block = params.replace(n=params.block_len, num_blocks=1)
    hyp = Hypothesis.H1 if direction is Direction.F1_F0 else Hypothesis.H0
    values = llr(sample_energies(block, hyp, samples, rng)[:, 0])
    if direction is Direction.F0_F1:
        values = -values
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class KlReport:
    """Divergence figures for one scenario. ``d_*`` and bounds are per block;
    the ``slot_*`` properties multiply by the block count."""

    num_blocks: int
    d_f1_f0_mc: float
    d_f1_f0_stderr: float
    d_f0_f1_mc: float
    d_f0_f1_stderr: float
    bound_ei: float
    bound_simple: float
    bound_quartic: float
    direction: Direction
    pe_floor: float

    @property
    def slot_d_f1_f0(self) -> float:
        return self.num_blocks * self.d_f1_f0_mc

    @property
    def slot_d_f0_f1(self) -> float:
        return self.num_blocks * self.d_f0_f1_mc

    @property
    def slot_bound_ei(self) -> float:
        return self.num_blocks * self.bound_ei

    @property
    def slot_bound_simple(self) -> float:
        return self.num_blocks * self.bound_simple

    @property
    def slot_bound_quartic(self) -> float:
        return self.num_blocks * self.bound_quartic


def kl_report(params: SystemParams, samples: int, rng: np.random.Generator,
              spec: QuadratureSpec = DEFAULT_QUADRATURE,
              direction=Direction.F0_F1) -> KlReport:
    """Both Monte Carlo directions, the three closed forms and the P_E floor.

    The floor uses the whole-slot divergence in ``direction``; a negative
    Monte Carlo estimate (possible when the divergence is tiny) is clipped at 0.
    """
    direction = Direction(direction)
    llr = LlrTable(params, spec) if params.alice_power > 0 else None
    r10, r01 = rng.spawn(2)
    d10, se10 = kl_mc(params, Direction.F1_F0, samples, r10, spec, llr)
    d01, se01 = kl_mc(params, Direction.F0_F1, samples, r01, spec, llr)
    d = d10 if direction is Direction.F1_F0 else d01
    return KlReport(params.num_blocks, d10, se10, d01, se01, kl_bound_ei(params),
                    kl_bound_simple(params), kl_bound_quartic(params), direction,
                    pe_floor(max(d, 0.0) * params.num_blocks))


@dataclass(frozen=True)
class ConverseMoments:
    """Mean and variance of Y' = Y / (2 sqrt B) - sqrt(B) s0 under both hypotheses."""

    e0_yp: float
    var0_yp: float
    e1_yp: float
    var1_yp: float

    @property
    def mean_gap(self) -> float:
        return self.e1_yp - self.e0_yp


def converse_moments(params: SystemParams) -> ConverseMoments:
    """Moments of the normalized block energy for complex samples.

    VAR1 uses E[(sa X + s0)^2] = s0^2 + 2 s0 sa / lambda + 2 sa^2 / lambda^2.
    """
    if params.field is not Field.COMPLEX:
        raise UnsupportedConfigurationError("converse moments are defined for complex samples only")
    b = params.block_len
    s0, sa, lam = params.noise_var, params.alice_power, params.fading_rate
    var1 = s0 ** 2 + 2.0 * sa ** 2 / lam ** 2 + 2.0 * sa * s0 / lam + b * sa ** 2 / lam ** 2
    return ConverseMoments(0.0, s0 ** 2, math.sqrt(b) * sa / lam, var1)
