"""
Estimators and Confidence Intervals
Binomial proportions with Wilson score intervals, and per-block seeding
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np
from scipy.stats import norm

CONFIDENCE = 0.95


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE):
    """Two-sided Wilson score interval (low, high) for a binomial proportion"""
    if trials <= 0:
        return 0.0, 1.0
    successes = max(0, min(int(successes), int(trials)))
    z = float(norm.ppf(0.5 + confidence / 2))
    z2 = z * z
    phat = successes / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    margin = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - margin), min(1.0, center + margin)


@dataclass(frozen=True)
class ProportionEstimate:
    """A Monte Carlo proportion with its 95% Wilson interval"""
    successes: int
    trials: int

    @property
    def value(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def interval(self):
        return wilson_interval(self.successes, self.trials)

    @property
    def half_width(self) -> float:
        low, high = self.interval
        return (high - low) / 2

    @property
    def sigma(self) -> float:
        """Wilson half-width expressed in standard deviations (z = 1.96)"""
        return self.half_width / float(norm.ppf(0.5 + CONFIDENCE / 2))

    def within(self, target: float, sigmas: float) -> bool:
        return abs(self.value - target) <= sigmas * max(self.sigma, binomial_sigma(target, self.trials))

    def to_dict(self) -> Dict[str, Any]:
        low, high = self.interval
        return {
            "successes": self.successes,
            "trials": self.trials,
            "estimate": self.value,
            "ci_low": low,
            "ci_high": high,
            "ci_half_width": self.half_width,
        }


def binomial_sigma(p: float, trials: int) -> float:
    """Standard deviation of a sample proportion"""
    if trials <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def block_rng(master_seed: int, block_index: int) -> np.random.Generator:
    """Generator for one work block; the stream depends only on (seed, block)"""
    return np.random.default_rng(np.random.SeedSequence([master_seed & ((1 << 64) - 1), block_index]))


def quantiles(values: Sequence[float], levels=(0.05, 0.25, 0.5, 0.75, 0.95)) -> Dict[str, float]:
    if len(values) == 0:
        return {}
    points = np.quantile(np.asarray(values, dtype=np.float64), levels)
    return {f"q{int(round(level * 100)):02d}": float(v) for level, v in zip(levels, points)}
