"""Gaussian generative model of true scores and biased, noisy evaluator reports.

True scores are drawn from ``Normal(mu, 1/gamma)`` and an evaluator with bias
``b`` and reliability ``tau`` reports ``y + b + n`` with ``n ~ Normal(0, 1/tau)``.
Scores stay unclipped here; clipping to the score interval only happens at
display boundaries (see :func:`clip_scores`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "Prior",
    "EvaluatorStrategy",
    "RngStream",
    "Report",
    "sample_true_scores",
    "sample_report",
    "report_from_standardized",
    "clip_scores",
]


@dataclass(frozen=True)
class Prior:
    """Prior over true scores: mean ``mu`` and precision ``gamma``."""

    mu: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"prior precision gamma must be finite and > 0, got {self.gamma}")
        if not math.isfinite(self.mu):
            raise ValueError(f"prior mean mu must be finite, got {self.mu}")

    @property
    def stddev(self) -> float:
        return 1.0 / math.sqrt(self.gamma)

    def check_interval(self, interval: tuple[float, float]) -> None:
        lo, hi = interval
        if not lo <= self.mu <= hi:
            raise ValueError(f"prior mean {self.mu} lies outside score interval [{lo}, {hi}]")


@dataclass(frozen=True)
class EvaluatorStrategy:
    """Bias and reliability (precision) an evaluator grades with."""

    bias: float
    reliability: float

    def __post_init__(self) -> None:
        if not (self.reliability > 0 and math.isfinite(self.reliability)):
            raise ValueError(f"reliability must be finite and > 0, got {self.reliability}")
        if not math.isfinite(self.bias):
            raise ValueError(f"bias must be finite, got {self.bias}")

    @property
    def noise_stddev(self) -> float:
        # 1/sqrt(tau): the report noise has variance 1/tau
        return 1.0 / math.sqrt(self.reliability)

    @classmethod
    def from_stddev(cls, bias: float, stddev: float) -> "EvaluatorStrategy":
        return cls(bias, 1.0 / (stddev * stddev))


@dataclass
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox bit generator seeded through a
    ``SeedSequence`` whose spawn key is the stream id, so distinct stream ids
    give statistically independent sequences and a given pair replays the same
    draws on every platform.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream_id < 0:
            raise ValueError(f"stream_id must be non-negative, got {self.stream_id}")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, stream_id: int) -> "RngStream":
        """Independent stream derived from this one's seed.

        Children of different parents never collide: the child id is packed
        together with the parent's id.
        """
        return RngStream(self.seed, _pair(self.stream_id, stream_id))

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def normal(self, loc, scale, size=None):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)


def _pair(a: int, b: int) -> int:
    # Cantor pairing, injective on non-negative integers
    return (a + b) * (a + b + 1) // 2 + b


class Report(NamedTuple):
    """A reported score together with the standardized draw that produced it."""

    value: float
    standardized: float


def sample_true_scores(prior: Prior, n: int, rng: RngStream) -> np.ndarray:
    """Draw ``n`` independent true scores from the prior (unclipped)."""
    if n < 1:
        raise ValueError(f"number of scores must be positive, got {n}")
    return prior.mu + prior.stddev * rng.standard_normal(n)


def report_from_standardized(true_score, strategy: EvaluatorStrategy, standardized):
    """``y + b + sigma * m`` for a given standardized draw ``m``."""
    return true_score + strategy.bias + strategy.noise_stddev * standardized


def sample_report(true_score: float, strategy: EvaluatorStrategy, rng: RngStream) -> Report:
    m = float(rng.standard_normal())
    return Report(float(report_from_standardized(true_score, strategy, m)), m)


def clip_scores(scores, interval: tuple[float, float]):
    lo, hi = interval
    if lo > hi:
        raise ValueError(f"empty score interval [{lo}, {hi}]")
    return np.clip(scores, lo, hi)
