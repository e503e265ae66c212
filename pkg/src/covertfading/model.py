"""Block-fading observation model at the adversary.

A slot of ``n`` channel uses is split into ``num_blocks`` blocks of
``block_len`` symbols. Under H1 each block draws a power gain
``x ~ Exp(fading_rate)`` and every sample in the block is zero-mean Gaussian
with variance ``noise_var + x * alice_power`` per real component. Under H0
only the noise remains.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


class Hypothesis(str, Enum):
    H0 = "h0"
    H1 = "h1"


@dataclass(frozen=True)
class SystemParams:
    """One covert-channel scenario.

    ``block_len`` may be omitted and is then derived as ``n // num_blocks``;
    construction fails unless ``num_blocks * block_len == n``.
    """

    n: int
    num_blocks: int
    fading_rate: float
    noise_var: float = 1.0
    alice_power: float = 0.0
    field: Field = Field.COMPLEX
    block_len: int | None = None

    def __post_init__(self):
        if isinstance(self.field, str) and not isinstance(self.field, Field):
            object.__setattr__(self, "field", Field(self.field))
        for name in ("n", "num_blocks"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        block_len = self.block_len
        if block_len is None:
            block_len = self.n // self.num_blocks
        if int(block_len) != block_len or block_len < 1:
            raise ValueError(f"block_len must be a positive integer, got {block_len!r}")
        object.__setattr__(self, "block_len", int(block_len))
        if self.num_blocks * self.block_len != self.n:
            raise ValueError(
                f"num_blocks * block_len = {self.num_blocks} * {self.block_len} != n = {self.n}")
        if not self.fading_rate > 0:
            raise ValueError("fading_rate must be positive")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")
        if not self.alice_power >= 0:
            raise ValueError("alice_power must be nonnegative")
        for name in ("fading_rate", "noise_var", "alice_power"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_blocks(cls, num_blocks, block_len, **kwargs) -> "SystemParams":
        return cls(n=num_blocks * block_len, num_blocks=num_blocks, block_len=block_len, **kwargs)

    @property
    def fading_mean(self) -> float:
        return 1.0 / self.fading_rate

    @property
    def kappa(self) -> float:
        """Shape of S / (2 sigma^2): B for complex samples, B/2 for real ones."""
        return float(self.block_len) if self.field is Field.COMPLEX else self.block_len / 2.0

    @property
    def dof(self) -> int:
        """Real Gaussian components per block."""
        return 2 * self.block_len if self.field is Field.COMPLEX else self.block_len

    @property
    def snr_ratio(self) -> float:
        """alice_power / noise_var."""
        return self.alice_power / self.noise_var

    def replace(self, **changes) -> "SystemParams":
        if ("n" in changes or "num_blocks" in changes) and "block_len" not in changes:
            changes["block_len"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["field"] = self.field.value
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FadingRealization:
    gains: np.ndarray

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        if gains.ndim != 1 or np.any(gains < 0):
            raise ValueError("gains must be a 1-D vector of nonnegative reals")
        object.__setattr__(self, "gains", gains)


@dataclass(frozen=True)
class Observation:
    """Samples of one slot (``num_blocks x block_len``) with per-block energies."""

    samples: np.ndarray
    block_energies: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "Observation":
        samples = np.atleast_2d(np.asarray(samples))
        return cls(samples, block_energies(samples))

    @property
    def num_blocks(self) -> int:
        return self.samples.shape[0]


def block_energies(obs) -> np.ndarray:
    """S_i = sum_j |z_ij|^2 for each block (rows of the sample array)."""
    samples = obs.samples if isinstance(obs, Observation) else np.atleast_2d(np.asarray(obs))
    if np.iscomplexobj(samples):
        return np.sum(samples.real ** 2 + samples.imag ** 2, axis=-1)
    return np.sum(np.square(samples, dtype=float), axis=-1)


def _gaussian(params: SystemParams, rng: np.random.Generator, std) -> np.ndarray:
    shape = (params.num_blocks, params.block_len)
    std = np.asarray(std, dtype=float).reshape(-1, 1)
    if params.field is Field.COMPLEX:
        return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return std * rng.standard_normal(shape)


def sample_h0(params: SystemParams, rng: np.random.Generator) -> Observation:
    """Noise-only slot."""
    samples = _gaussian(params, rng, np.sqrt(params.noise_var))
    return Observation(samples, block_energies(samples))


def sample_fading(params: SystemParams, rng: np.random.Generator) -> FadingRealization:
    return FadingRealization(rng.exponential(params.fading_mean, params.num_blocks))


def sample_h1(params: SystemParams, rng: np.random.Generator):
    """Slot with Alice transmitting; returns the observation and the fading gains."""
    fading = sample_fading(params, rng)
    theta = params.noise_var + params.alice_power * fading.gains
    samples = _gaussian(params, rng, np.sqrt(theta))
    return Observation(samples, block_energies(samples)), fading


def sample_energies(params: SystemParams, hypothesis, trials: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Draw block energies for ``trials`` slots directly, shape (trials, num_blocks).

    Uses S = 2 theta G with G ~ Gamma(kappa), which has the same law as the
    energies of :func:`sample_h0` / :func:`sample_h1` without materializing
    the samples.
    """
    hypothesis = Hypothesis(hypothesis)
    shape = (int(trials), params.num_blocks)
    if hypothesis is Hypothesis.H1:
        theta = params.noise_var + params.alice_power * rng.exponential(params.fading_mean, shape)
    else:
        theta = params.noise_var
    return 2.0 * theta * rng.standard_gamma(params.kappa, shape)
