"""Streaming mean/variance/standard-error accumulator (Welford, with Chan's merge)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable


@dataclass(slots=True)
class StatAccumulator:
    """Single-pass accumulator of count, mean and sum of squared deviations.

    ``update`` mutates in place and returns ``self`` so calls can be chained;
    ``merge`` returns a fresh accumulator and leaves both inputs untouched.
    """

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_values(cls, values: Iterable[float]) -> StatAccumulator:
        acc = cls()
        for x in values:
            acc.update(x)
        return acc

    def update(self, x: float) -> StatAccumulator:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)
        return self

    @property
    def variance(self) -> float:
        """Sample variance; NaN when fewer than two points have been seen."""
        if self.n < 2:
            return math.nan
        return self.m2 / (self.n - 1)

    @property
    def std(self) -> float:
        if self.n < 2:
            return math.nan
        return math.sqrt(self.m2 / (self.n - 1))

    def stderr(self) -> float:
        """Standard error of the mean, or ``math.inf`` for n < 2."""
        n = self.n
        if n < 2:
            return math.inf
        return math.sqrt(self.m2 / ((n - 1) * n))

    def merge(self, other: StatAccumulator) -> StatAccumulator:
        if other.n == 0:
            return StatAccumulator(self.n, self.mean, self.m2)
        if self.n == 0:
            return StatAccumulator(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        # weighted form keeps merge(a, b).mean == merge(b, a).mean
        mean = (self.n * self.mean + other.n * other.mean) / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return StatAccumulator(n, mean, m2)

    def copy(self) -> StatAccumulator:
        return StatAccumulator(self.n, self.mean, self.m2)
