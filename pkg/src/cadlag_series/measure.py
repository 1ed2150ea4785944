"""Finite control measures on one-dimensional mark spaces.

Two families are supported: an interval ``[a, b]`` carrying a piecewise-linear
density (Lebesgue measure is the constant-density case) and a finite set of
weighted atoms.  Both sample marks from the normalised measure and integrate
functions against the unnormalised one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .randomness import RngStream

DEFAULT_NODES = 2048


@dataclass(frozen=True)
class Integral:
    value: float
    error: float


class ControlMeasure:
    """Interface shared by the concrete measures."""

    total_mass: float
    continuous: bool

    def sample_marks(self, stream: RngStream, count: int) -> np.ndarray:
        raise NotImplementedError

    def sample_mark(self, stream: RngStream) -> float:
        return float(self.sample_marks(stream, 1)[0])

    def rule(self, breakpoints: Sequence[float] = (), nodes: int = DEFAULT_NODES):
        """Quadrature nodes and weights for ``int g dm``."""
        raise NotImplementedError

    def integrate(
        self,
        g: Callable[[np.ndarray], np.ndarray],
        breakpoints: Sequence[float] = (),
        nodes: int = DEFAULT_NODES,
    ) -> Integral:
        """Integrate ``g`` against the measure.

        The error estimate is the change against the rule with half the nodes.
        Supplying the discontinuities of ``g`` as ``breakpoints`` makes the
        rule exact for piecewise-constant integrands.
        """
        s, w = self.rule(breakpoints, nodes)
        fine = _weighted_sum(g, s, w)
        if not self.continuous:
            return Integral(fine, 0.0)
        s2, w2 = self.rule(breakpoints, max(nodes // 2, 1))
        coarse = _weighted_sum(g, s2, w2)
        err = abs(fine - coarse) + 4 * np.finfo(float).eps * abs(fine)
        return Integral(fine, float(err))


def _weighted_sum(g, s, w) -> float:
    vals = np.asarray(g(s), dtype=float)
    vals = np.broadcast_to(vals, s.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite at a quadrature node")
    return float(np.dot(vals, w))


@dataclass(frozen=True, eq=False)
class DensityMeasure(ControlMeasure):
    """Measure on ``[nodes[0], nodes[-1]]`` with a piecewise-linear density."""

    nodes: np.ndarray
    density: np.ndarray
    continuous: bool = field(default=True, init=False)

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if x.ndim != 1 or x.shape != d.shape or x.size < 2:
            raise ValueError("density table needs at least two (node, density) rows")
        if np.any(np.diff(x) <= 0):
            raise ValueError("density nodes must be strictly increasing")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("density values must be finite and non-negative")
        cell = 0.5 * (d[1:] + d[:-1]) * np.diff(x)
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        if not cum[-1] > 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "_cell_mass", cell)
        object.__setattr__(self, "_cum", cum)

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    @property
    def support(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    def density_at(self, s) -> np.ndarray:
        return np.interp(s, self.nodes, self.density, left=0.0, right=0.0)

    def sample_marks(self, stream: RngStream, count: int) -> np.ndarray:
        gen = stream.generator()
        q = gen.random(int(count)) * self.total_mass
        k = np.searchsorted(self._cum, q, side="right") - 1
        k = np.clip(k, 0, self._cell_mass.size - 1)
        x0 = self.nodes[k]
        h = self.nodes[k + 1] - x0
        d0 = self.density[k]
        slope = (self.density[k + 1] - d0) / h
        m = np.clip(q - self._cum[k], 0.0, self._cell_mass[k])
        # root of d0*y + slope*y**2/2 = m in the cancellation-free form
        y = 2.0 * m / (d0 + np.sqrt(np.maximum(d0 * d0 + 2.0 * slope * m, 0.0)))
        return x0 + np.clip(y, 0.0, h)

    def rule(self, breakpoints: Sequence[float] = (), nodes: int = DEFAULT_NODES):
        a, b = self.support
        bp = np.asarray(breakpoints, dtype=float).ravel()
        bp = bp[(bp > a) & (bp < b)]
        edges = np.unique(np.concatenate([self.nodes, bp]))
        lengths = np.diff(edges)
        counts = np.maximum(1, np.rint(nodes * lengths / (b - a)).astype(int))
        piece = np.repeat(np.arange(lengths.size), counts)
        offset = np.arange(piece.size) - np.repeat(np.cumsum(counts) - counts, counts)
        h = lengths[piece] / counts[piece]
        s = edges[piece] + (offset + 0.5) * h
        w = h * self.density_at(s)
        return s, w


@dataclass(frozen=True, eq=False)
class AtomMeasure(ControlMeasure):
    """Finite set of atoms ``sum_k masses[k] * delta_{locations[k]}``."""

    locations: np.ndarray
    masses: np.ndarray
    continuous: bool = field(default=False, init=False)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.locations, dtype=float))
        w = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if x.shape != w.shape or x.ndim != 1 or x.size == 0:
            raise ValueError("atoms need matching non-empty location and mass lists")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not w.sum() > 0:
            raise ValueError("atom masses must be finite, non-negative, with positive total")
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "masses", w)
        object.__setattr__(self, "_cum", np.cumsum(w))

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    def sample_marks(self, stream: RngStream, count: int) -> np.ndarray:
        q = stream.generator().random(int(count)) * self.total_mass
        k = np.searchsorted(self._cum, q, side="right")
        return self.locations[np.minimum(k, self.locations.size - 1)]

    def rule(self, breakpoints: Sequence[float] = (), nodes: int = DEFAULT_NODES):
        return self.locations.copy(), self.masses.copy()


def lebesgue(a: float = 0.0, b: float = 1.0) -> DensityMeasure:
    return DensityMeasure(np.array([a, b]), np.array([1.0, 1.0]))


def atoms(locations, masses) -> AtomMeasure:
    return AtomMeasure(np.asarray(locations), np.asarray(masses))


def _read_columns(path: str | Path, ncols: int) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row[:ncols]])
            except ValueError:
                if rows:
                    raise
                continue  # header line
            if len(rows[-1]) != ncols:
                raise ValueError(f"{path}: expected {ncols} columns")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows)


def load_density_csv(path: str | Path) -> DensityMeasure:
    """Two-column CSV of ``node, density``."""
    table = _read_columns(path, 2)
    order = np.argsort(table[:, 0], kind="stable")
    return DensityMeasure(table[order, 0], table[order, 1])


def load_atoms_csv(path: str | Path) -> AtomMeasure:
    """Two-column CSV of ``location, mass``."""
    table = _read_columns(path, 2)
    return AtomMeasure(table[:, 0], table[:, 1])
