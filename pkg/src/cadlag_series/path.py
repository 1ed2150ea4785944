"""Cadlag paths on a time grid, with an exact ledger of their jumps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class JumpLedger:
    """Jump records ``(time, size, term)`` sorted by time, ties by term index."""

    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    sizes: np.ndarray = field(default_factory=lambda: np.empty(0))
    terms: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.sizes, dtype=float)
        j = np.asarray(self.terms, dtype=np.int64)
        if not (t.shape == d.shape == j.shape) or t.ndim != 1:
            raise ValueError("ledger columns must be 1-d and of equal length")
        if t.size and (t.min() < 0 or t.max() > 1):
            raise ValueError("jump times must lie in [0, 1]")
        order = np.lexsort((j, t))
        object.__setattr__(self, "times", t[order])
        object.__setattr__(self, "sizes", d[order])
        object.__setattr__(self, "terms", j[order])

    def __len__(self) -> int:
        return int(self.times.size)

    def shared_times(self) -> int:
        """Number of adjacent entry pairs with distinct terms at the same time."""
        if self.times.size < 2:
            return 0
        same = (self.times[1:] == self.times[:-1]) & (self.terms[1:] != self.terms[:-1])
        return int(np.count_nonzero(same))


@dataclass(frozen=True, eq=False)
class CadlagPath:
    """Right-continuous path sampled on a grid that contains 0 and 1."""

    grid: np.ndarray
    values: np.ndarray
    ledger: JumpLedger = field(default_factory=JumpLedger)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
        if g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must increase strictly from 0 to 1")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, t) -> np.ndarray:
        """Step evaluation: value at the last grid point not after ``t``."""
        k = np.searchsorted(self.grid, t, side="right") - 1
        return self.values[np.clip(k, 0, self.grid.size - 1)]

    def resample(self, grid: np.ndarray) -> CadlagPath:
        return CadlagPath(grid, self(grid), self.ledger)


def uniform_grid(resolution: int) -> np.ndarray:
    return np.arange(resolution + 1) / resolution


def sup_norm_diff(p1: CadlagPath, p2: CadlagPath, resample: bool = False) -> float:
    """Grid maximum of ``|p1 - p2|``; a lower bound of the uniform distance."""
    if p1.grid.shape != p2.grid.shape or np.any(p1.grid != p2.grid):
        if not resample:
            raise ValueError("paths live on different grids; pass resample=True")
        grid = np.union1d(p1.grid, p2.grid)
        return float(np.max(np.abs(p1(grid) - p2(grid))))
    return float(np.max(np.abs(p1.values - p2.values)))


def vp_of_jumps(ledger: JumpLedger, p: float) -> float:
    """``sum |jump|**p`` over the ledger."""
    if not p > 0:
        raise ValueError("p must be positive")
    return float(np.sum(np.abs(ledger.sizes) ** p))


def max_abs_jump(ledger: JumpLedger) -> float:
    return float(np.max(np.abs(ledger.sizes))) if len(ledger) else 0.0


def max_jump(ledger: JumpLedger) -> float:
    """Largest jump, floored at 0: the path has no jump off the ledger times."""
    return max(float(np.max(ledger.sizes)), 0.0) if len(ledger) else 0.0


def grid_pvariation(path: CadlagPath, p: float) -> float:
    """p-variation over partitions drawn from the grid, by O(n^2) dynamic programming.

    Only the endpoints and turning points of the sampled sequence can improve
    a partition when ``p >= 1``, so the search runs over those.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    x = path.values
    dx = np.diff(x)
    nz = np.flatnonzero(dx)
    if nz.size == 0:
        return 0.0
    # turning points: where the sign of the last nonzero increment flips
    sgn = np.sign(dx[nz])
    flips = nz[1:][sgn[1:] != sgn[:-1]]
    keep = np.unique(np.concatenate([[0, x.size - 1], flips]))
    y = x[keep]
    best = np.zeros(y.size)
    for j in range(1, y.size):
        best[j] = np.max(best[:j] + np.abs(y[j] - y[:j]) ** p)
    return float(best[-1] ** (1.0 / p))


def j1_distance(p1: CadlagPath, p2: CadlagPath, knots: int = 512) -> float:
    """Approximate Skorohod J1 distance from a monotone alignment on ``knots + 1`` points.

    Both paths are read at ``u_i = i / knots``.  A bottleneck dynamic program
    over monotone lattice paths from ``(0, 0)`` to ``(knots, knots)`` minimises
    ``max(|x(u_i) - y(u_j)|, |u_i - u_j|)`` along the alignment.  The identity
    alignment is one candidate, so the result never exceeds the knot-grid
    uniform distance.  It approximates the infimum from above up to the knot
    spacing; it is not the exact metric.
    """
    if knots < 1:
        raise ValueError("knots must be >= 1")
    u = np.arange(knots + 1) / knots
    x = p1(u)
    y = p2(u)
    n = knots + 1
    inf = np.inf
    # D over anti-diagonals d = i + j; keep the two previous diagonals indexed by i
    prev2 = None
    prev1 = np.full(n, inf)
    prev1[0] = max(abs(x[0] - y[0]), 0.0)
    for d in range(1, 2 * n - 1):
        lo = max(0, d - (n - 1))
        hi = min(d, n - 1)
        i = np.arange(lo, hi + 1)
        j = d - i
        cost = np.maximum(np.abs(x[i] - y[j]), np.abs(u[i] - u[j]))
        best = np.full(i.size, inf)
        # from (i-1, j)
        m = i >= 1
        best[m] = np.minimum(best[m], prev1[i[m] - 1])
        # from (i, j-1)
        m = j >= 1
        best[m] = np.minimum(best[m], prev1[i[m]])
        # from (i-1, j-1)
        if prev2 is not None:
            m = (i >= 1) & (j >= 1)
            best[m] = np.minimum(best[m], prev2[i[m] - 1])
        cur = np.full(n, inf)
        cur[i] = np.maximum(cost, best)
        prev2, prev1 = prev1, cur
    return float(prev1[n - 1])


def ledger_from_arrays(times, sizes, terms) -> JumpLedger:
    return JumpLedger(np.asarray(times, float), np.asarray(sizes, float), np.asarray(terms, np.int64))
