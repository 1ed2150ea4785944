"""Empirical distributions and Kolmogorov-Smirnov statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.values, x, side="right") / self.n


def _as_sample(x) -> EmpiricalSample:
    return x if isinstance(x, EmpiricalSample) else EmpiricalSample(x)


def ks_one_sample(sample, cdf: Callable) -> float:
    """``sup_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|)`` over the sorted sample."""
    s = _as_sample(sample)
    if s.n == 0:
        raise ValueError("sample is empty")
    f = np.asarray(cdf(s.values), dtype=float)
    i = np.arange(1, s.n + 1)
    d = np.maximum(np.abs(i / s.n - f), np.abs((i - 1) / s.n - f))
    return float(d.max())


def ks_two_sample(a, b) -> float:
    """``sup_x |F_a(x) - F_b(x)|`` over the pooled sample points."""
    a = _as_sample(a)
    b = _as_sample(b)
    if a.n == 0 or b.n == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a.values, b.values])
    return float(np.max(np.abs(a.cdf(pooled) - b.cdf(pooled))))


def quantiles(sample, probs: Sequence[float]) -> list[float]:
    s = _as_sample(sample)
    probs = list(probs)
    if not probs:
        return []
    return [float(q) for q in np.quantile(s.values, probs)]


def ks_critical_two_sample(n: int, m: int, c: float = 1.36) -> float:
    """Asymptotic critical value ``c sqrt((n + m) / (n m))``; 1.36 is the 5% level."""
    return c * np.sqrt((n + m) / (n * m))
