"""Deterministic random streams and the primitive samplers behind the series.

Every stream is addressed by ``(master_seed, stream_path)``.  The path is fed
to :class:`numpy.random.SeedSequence` as its spawn key and drives a Philox
counter-based generator, so a stream's output depends only on its address and
never on the order in which other streams were consumed.

Samplers open a fresh generator for their stream on every call.  Asking for
``k + 1`` arrivals therefore returns the ``k`` arrivals of the shorter call as
a prefix: arrivals are extended, never regenerated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Substream indices used under a replicate stream.
ARRIVALS = 0
SIGNS = 1
MARKS = 2
AUX = 3

# Replicate index reserved for reference draws (CMS samples, centering MC).
REFERENCE = 2**32 - 1

_CHUNK = 4096


@dataclass(frozen=True)
class RngStream:
    """Address of an independent random stream."""

    master_seed: int
    stream_path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        path = tuple(int(i) for i in self.stream_path)
        if any(i < 0 for i in path):
            raise ValueError("stream_path entries must be non-negative")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "stream_path", path)

    def child(self, *index: int) -> RngStream:
        return RngStream(self.master_seed, self.stream_path + tuple(index))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_path)
        return np.random.Generator(np.random.Philox(seq))


def gamma_arrivals(stream: RngStream, count: int) -> np.ndarray:
    """First ``count`` arrival times of a unit-rate Poisson process."""
    if count < 0:
        raise ValueError("count must be >= 0")
    gen = stream.generator()
    return np.cumsum(gen.standard_exponential(int(count)))


def arrivals_until(stream: RngStream, level: float) -> np.ndarray:
    """All arrival times ``<= level``, drawn by extension in chunks.

    The result is a prefix of ``gamma_arrivals(stream, k)`` for any large
    enough ``k``.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    gen = stream.generator()
    waits = np.empty(0)
    arrivals = np.empty(0)
    chunk = _CHUNK
    while arrivals.size == 0 or arrivals[-1] <= level:
        waits = np.concatenate([waits, gen.standard_exponential(chunk)])
        arrivals = np.cumsum(waits)
        chunk *= 2
    return arrivals[: np.searchsorted(arrivals, level, side="right")]


def rademacher(stream: RngStream, count: int) -> np.ndarray:
    """I.i.d. symmetric signs as a float array of +1.0 / -1.0."""
    if count < 0:
        raise ValueError("count must be >= 0")
    u = stream.generator().random(int(count))
    return np.where(u < 0.5, 1.0, -1.0)


def uniforms(stream: RngStream, count: int) -> np.ndarray:
    return stream.generator().random(int(count))


def _check_alpha(alpha: float, lo: float, hi: float, name: str) -> float:
    alpha = float(alpha)
    if not lo < alpha < hi:
        raise ValueError(f"{name} must lie in ({lo}, {hi}), got {alpha}")
    return alpha


def sample_sas(stream: RngStream, alpha: float, scale: float, count: int) -> np.ndarray:
    """Symmetric alpha-stable draws with characteristic function
    ``exp(-scale**alpha * |theta|**alpha)`` (Chambers-Mallows-Stuck).
    """
    alpha = _check_alpha(alpha, 0.0, 2.0, "alpha")
    if not scale > 0:
        raise ValueError("scale must be positive")
    gen = stream.generator()
    u = math.pi * (gen.random(int(count)) - 0.5)
    w = gen.standard_exponential(int(count))
    if alpha == 1.0:
        x = np.tan(u)
    else:
        x = (
            np.sin(alpha * u)
            / np.cos(u) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
        )
    return scale * x


def sample_positive_stable(
    stream: RngStream, alpha_prime: float, scale: float, count: int
) -> np.ndarray:
    """Totally skewed positive stable draws, ``S(alpha', scale, beta=1, 0)``.

    Unit scale has Laplace transform ``exp(-s**alpha' / cos(pi alpha' / 2))``,
    the law of ``c_{alpha'} * sum_j Gamma_j**(-1/alpha')``.  The test suite pins
    this against the one-sided series.
    """
    a = _check_alpha(alpha_prime, 0.0, 1.0, "alpha_prime")
    if not scale > 0:
        raise ValueError("scale must be positive")
    gen = stream.generator()
    u = math.pi * (gen.random(int(count)) - 0.5)
    w = gen.standard_exponential(int(count))
    half = 0.5 * math.pi
    # beta = 1: B = pi/2, S = cos(pi a / 2)**(-1/a)
    s = math.cos(half * a) ** (-1.0 / a)
    x = (
        s
        * np.sin(a * (u + half))
        / np.cos(u) ** (1.0 / a)
        * (np.cos(u - a * (u + half)) / w) ** ((1.0 - a) / a)
    )
    return scale * x
