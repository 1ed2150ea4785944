"""Integrand families ``f(t, s)`` with exact jump metadata, and series integrands.

A :class:`Kernel` is a function of time ``t`` in ``[0, 1]`` and mark ``s``
whose sections ``t -> f(t, s)`` are cadlag with finitely many jumps.  Jump
times and sizes are supplied analytically (or declared, for tabulated
kernels); nothing is detected numerically.

A :class:`SeriesIntegrand` is the function ``H(t, r, v)`` summed over Poisson
arrivals ``r = Gamma_j`` and marks ``v = V_j``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .measure import ControlMeasure
from .randomness import RngStream

_DENSE_CHUNK = 2**22


def c_alpha(alpha: float) -> float:
    """LePage constant ``[-alpha cos(pi alpha/2) Gamma(-alpha)]**(-1/alpha)``, with ``c_1 = 2/pi``."""
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        return 2.0 / math.pi
    return (-alpha * math.cos(0.5 * math.pi * alpha) * math.gamma(-alpha)) ** (-1.0 / alpha)


@dataclass(frozen=True)
class Jumps:
    """Flat jump table: ``term`` indexes into the mark array passed in."""

    term: np.ndarray
    time: np.ndarray
    size: np.ndarray


class Kernel:
    """Base class.  Subclasses implement :meth:`eval` and :meth:`jumps`."""

    def eval(self, t, s) -> np.ndarray:
        raise NotImplementedError

    def jumps(self, marks: np.ndarray) -> Jumps:
        """All section jumps for an array of marks."""
        raise NotImplementedError

    def section_jump_times(self, s: float) -> np.ndarray:
        j = self.jumps(np.array([float(s)]))
        return j.time

    def jump_size(self, t, s) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        tb, sb = np.broadcast_arrays(t, s)
        out = np.zeros(tb.shape)
        flat_t, flat_s = tb.ravel(), sb.ravel()
        res = out.ravel()
        for i in range(flat_t.size):
            j = self.jumps(np.array([flat_s[i]]))
            hit = j.time == flat_t[i]
            if hit.any():
                res[i] = j.size[hit].sum()
        return res.reshape(tb.shape) if tb.shape else float(res[0])

    def s_breakpoints(self, t: float) -> np.ndarray:
        """Marks where ``s -> f(t, s)`` may be discontinuous."""
        return np.empty(0)

    def section_sup_abs(self, marks: np.ndarray, grid: Optional[np.ndarray] = None) -> np.ndarray:
        """``sup_t |f(t, s)|`` per mark, from a grid plus the jump times."""
        marks = np.asarray(marks, dtype=float)
        if grid is None:
            grid = np.linspace(0.0, 1.0, 1025)
        out = np.abs(self.eval(grid[:, None], marks[None, :])).max(axis=0)
        j = self.jumps(marks)
        if j.term.size:
            at = np.abs(self.eval(j.time, marks[j.term]))
            np.maximum.at(out, j.term, at)
        return out

    def jump_extremes(self, s: np.ndarray):
        """Per mark: ``max |jump|``, ``max(sup jump, 0)`` and ``max(-inf jump, 0)``."""
        s = np.asarray(s, dtype=float)
        j = self.jumps(s)
        absmax = np.zeros(s.size)
        up = np.zeros(s.size)
        down = np.zeros(s.size)
        if j.term.size:
            np.maximum.at(absmax, j.term, np.abs(j.size))
            np.maximum.at(up, j.term, j.size)
            np.maximum.at(down, j.term, -j.size)
        return absmax, up, down

    def section_vp(self, s: np.ndarray, p: float) -> np.ndarray:
        """``V_p(f(., s)) = sum over jumps |jump|**p`` per mark."""
        s = np.asarray(s, dtype=float)
        j = self.jumps(s)
        out = np.zeros(s.size)
        if j.term.size:
            np.add.at(out, j.term, np.abs(j.size) ** p)
        return out

    def accumulate(self, grid: np.ndarray, weights: np.ndarray, marks: np.ndarray) -> np.ndarray:
        """``sum_j weights[j] * f(grid, marks[j])`` by dense evaluation."""
        grid = np.asarray(grid, dtype=float)
        out = np.zeros(grid.size)
        step = max(1, _DENSE_CHUNK // max(grid.size, 1))
        for k in range(0, marks.size, step):
            block = self.eval(grid[:, None], marks[None, k : k + step])
            out += block @ weights[k : k + step]
        return out


@dataclass(frozen=True)
class IndicatorKernel(Kernel):
    """``f(t, s) = 1{0 < s <= t}``: the Levy-process kernel."""

    def eval(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        return ((s > 0) & (s <= t)).astype(float)

    def jumps(self, marks):
        marks = np.asarray(marks, dtype=float)
        term = np.flatnonzero((marks > 0) & (marks <= 1))
        return Jumps(term, marks[term], np.ones(term.size))

    def s_breakpoints(self, t):
        return np.array([0.0, float(t)])

    def section_sup_abs(self, marks, grid=None):
        marks = np.asarray(marks, dtype=float)
        return ((marks > 0) & (marks <= 1)).astype(float)

    def accumulate(self, grid, weights, marks):
        grid = np.asarray(grid, dtype=float)
        w = np.where(marks > 0, weights, 0.0)
        order = np.argsort(marks, kind="stable")
        csum = np.concatenate([[0.0], np.cumsum(w[order])])
        return csum[np.searchsorted(marks[order], grid, side="right")]


@dataclass(frozen=True)
class OUKernel(Kernel):
    """``f(t, s) = exp(-lam (t - s)) 1{0 < s <= t}``: stable Ornstein-Uhlenbeck kernel."""

    lam: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def eval(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        on = (s > 0) & (s <= t)
        return np.where(on, np.exp(-self.lam * np.where(on, t - s, 0.0)), 0.0)

    def jumps(self, marks):
        marks = np.asarray(marks, dtype=float)
        term = np.flatnonzero((marks > 0) & (marks <= 1))
        return Jumps(term, marks[term], np.ones(term.size))

    def s_breakpoints(self, t):
        return np.array([0.0, float(t)])

    def section_sup_abs(self, marks, grid=None):
        marks = np.asarray(marks, dtype=float)
        return ((marks > 0) & (marks <= 1)).astype(float)

    def accumulate(self, grid, weights, marks):
        if self.lam > 500:
            return super().accumulate(grid, weights, marks)
        grid = np.asarray(grid, dtype=float)
        on = (marks > 0) & (marks <= 1)
        # exp(-lam t) * sum_{V_j <= t} w_j exp(lam V_j); rounding stays O(eps * sum |w|)
        w = np.where(on, weights * np.exp(self.lam * np.where(on, marks, 0.0)), 0.0)
        order = np.argsort(marks, kind="stable")
        csum = np.concatenate([[0.0], np.cumsum(w[order])])
        return np.exp(-self.lam * grid) * csum[np.searchsorted(marks[order], grid, side="right")]


@dataclass(frozen=True, eq=False)
class FunctionKernel(Kernel):
    """User-supplied vectorised ``f(t, s)`` with optional analytic jump metadata.

    ``jump_fn(marks) -> (term, time, size)`` must list every section jump;
    without it the kernel is treated as continuous in ``t``.
    """

    func: Callable
    jump_fn: Optional[Callable] = None
    breakpoints_fn: Optional[Callable] = None

    def eval(self, t, s):
        return np.asarray(self.func(np.asarray(t, dtype=float), np.asarray(s, dtype=float)), dtype=float)

    def jumps(self, marks):
        if self.jump_fn is None:
            return Jumps(np.empty(0, dtype=int), np.empty(0), np.empty(0))
        term, time, size = self.jump_fn(np.asarray(marks, dtype=float))
        return Jumps(np.asarray(term, dtype=int), np.asarray(time, float), np.asarray(size, float))

    def s_breakpoints(self, t):
        if self.breakpoints_fn is None:
            return np.empty(0)
        return np.asarray(self.breakpoints_fn(t), dtype=float)


@dataclass(frozen=True, eq=False)
class TabulatedKernel(Kernel):
    """Kernel given on a rectangular ``(t, s)`` grid with declared jumps.

    Marks use the column of the largest grid ``s`` not exceeding them.  In time
    the section is linear between grid points, except that the left limit at a
    declared jump time ``tau`` is ``value(tau) - jump_size``.  A step in the data
    that is not declared becomes a steep ramp and is missed by the ledger.
    """

    t_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray  # shape (len(t_grid), len(s_grid))
    jump_table: np.ndarray = field(default=None)  # same shape; declared jump sizes

    def __post_init__(self):
        t = np.asarray(self.t_grid, float)
        s = np.asarray(self.s_grid, float)
        v = np.asarray(self.values, float)
        if v.shape != (t.size, s.size):
            raise ValueError("values must have shape (len(t_grid), len(s_grid))")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("grids must be strictly increasing")
        d = np.zeros_like(v) if self.jump_table is None else np.asarray(self.jump_table, float)
        if d.shape != v.shape:
            raise ValueError("jump table shape mismatch")
        if np.any(d[0] != 0):
            raise ValueError("jumps at the first time grid point are not allowed")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "jump_table", d)
        object.__setattr__(self, "_left", v - d)

    def _column(self, s):
        k = np.searchsorted(self.s_grid, s, side="right") - 1
        return np.clip(k, 0, self.s_grid.size - 1)

    def eval(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        t, s = np.broadcast_arrays(t, s)
        col = self._column(s)
        tg = self.t_grid
        i = np.clip(np.searchsorted(tg, t, side="right") - 1, 0, tg.size - 1)
        nxt = np.minimum(i + 1, tg.size - 1)
        span = tg[nxt] - tg[i]
        w = np.where(span > 0, (np.clip(t, tg[0], tg[-1]) - tg[i]) / np.where(span > 0, span, 1.0), 0.0)
        return (1.0 - w) * self.values[i, col] + w * self._left[nxt, col]

    def jumps(self, marks):
        marks = np.asarray(marks, dtype=float)
        cols = self._column(marks)
        sub = self.jump_table[:, cols]  # (nt, n_marks)
        ti, term = np.nonzero(sub != 0)
        order = np.lexsort((ti, term))
        ti, term = ti[order], term[order]
        return Jumps(term, self.t_grid[ti], sub[ti, term])

    def s_breakpoints(self, t):
        return self.s_grid.copy()


def indicator_kernel() -> IndicatorKernel:
    return IndicatorKernel()


def ou_kernel(lam: float) -> OUKernel:
    return OUKernel(float(lam))


def load_tabulated_kernel(values_csv: str | Path, jumps_csv: str | Path | None = None) -> TabulatedKernel:
    """Read ``t, s, value`` rows on a rectangular grid, plus a ``s, jump_time, jump_size`` manifest."""
    rows = _read_rows(values_csv, 3)
    t_grid = np.unique(rows[:, 0])
    s_grid = np.unique(rows[:, 1])
    if rows.shape[0] != t_grid.size * s_grid.size:
        raise ValueError(f"{values_csv}: grid is not rectangular")
    values = np.full((t_grid.size, s_grid.size), np.nan)
    values[np.searchsorted(t_grid, rows[:, 0]), np.searchsorted(s_grid, rows[:, 1])] = rows[:, 2]
    if np.isnan(values).any():
        raise ValueError(f"{values_csv}: grid is not rectangular")
    table = np.zeros_like(values)
    if jumps_csv is not None:
        for s, tau, size in _read_rows(jumps_csv, 3):
            i = np.searchsorted(t_grid, tau)
            k = np.searchsorted(s_grid, s)
            if i >= t_grid.size or t_grid[i] != tau or k >= s_grid.size or s_grid[k] != s:
                raise ValueError(f"{jumps_csv}: jump ({s}, {tau}) is not on the kernel grid")
            table[i, k] = size
    return TabulatedKernel(t_grid, s_grid, values, table)


def _read_rows(path, ncols) -> np.ndarray:
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
    if not rows:
        return np.empty((0, ncols))
    return np.array(rows)


# ---------------------------------------------------------------------------
# series integrands


@dataclass(frozen=True, eq=False)
class SeriesIntegrand:
    """``H(t, r, v)`` for the shot-noise series, with shift ``b(t)``.

    When ``kernel`` and ``amplitude`` are set the integrand is separable,
    ``H = amplitude(r) * kernel(t, v)``, and paths and jumps use the kernel's
    fast routines.  ``symmetric`` means marks carry independent signs and the
    summed term is ``eps * H``; no centering is needed then.
    """

    func: Optional[Callable] = None
    shift: Optional[Callable] = None
    monotone_norm: bool = True
    symmetric: bool = False
    kernel: Optional[Kernel] = None
    amplitude: Optional[Callable] = None
    jump_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.func is None and (self.kernel is None or self.amplitude is None):
            raise ValueError("need either func or kernel + amplitude")

    @property
    def separable(self) -> bool:
        return self.kernel is not None and self.amplitude is not None

    def __call__(self, t, r, v) -> np.ndarray:
        if self.separable:
            return np.asarray(self.amplitude(np.asarray(r, float)), float) * self.kernel.eval(t, v)
        return np.asarray(self.func(np.asarray(t, float), np.asarray(r, float), np.asarray(v, float)), float)

    def b(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.shift is None:
            return np.zeros(t.shape)
        return np.broadcast_to(np.asarray(self.shift(t), float), t.shape).copy()

    def sup_norm(self, r: np.ndarray, v: np.ndarray, grid: Optional[np.ndarray] = None) -> np.ndarray:
        """``sup_t |H(t, r_j, v_j)|`` elementwise."""
        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.separable:
            return np.abs(self.amplitude(r)) * self.kernel.section_sup_abs(v, grid)
        if grid is None:
            grid = np.linspace(0.0, 1.0, 1025)
        out = np.empty(r.size)
        step = max(1, _DENSE_CHUNK // grid.size)
        for k in range(0, r.size, step):
            out[k : k + step] = np.abs(self(grid[:, None], r[None, k : k + step], v[None, k : k + step])).max(axis=0)
        return out

    def term_jumps(self, r: np.ndarray, v: np.ndarray) -> Jumps:
        if self.separable:
            j = self.kernel.jumps(v)
            return Jumps(j.term, j.time, j.size * np.asarray(self.amplitude(r), float)[j.term])
        if self.jump_fn is None:
            return Jumps(np.empty(0, dtype=int), np.empty(0), np.empty(0))
        term, time, size = self.jump_fn(r, v)
        return Jumps(np.asarray(term, int), np.asarray(time, float), np.asarray(size, float))


def separable_integrand(kernel: Kernel, amplitude: Callable, symmetric: bool = False,
                        monotone_norm: bool = True, shift: Optional[Callable] = None) -> SeriesIntegrand:
    return SeriesIntegrand(kernel=kernel, amplitude=amplitude, symmetric=symmetric,
                           monotone_norm=monotone_norm, shift=shift)


@dataclass(frozen=True)
class PowerAmplitude:
    """``r -> coef * r**(-1/alpha)``; picklable, unlike a lambda."""

    coef: float
    alpha: float

    def __call__(self, r):
        return self.coef * np.asarray(r, dtype=float) ** (-1.0 / self.alpha)


def lepage_integrand(kernel: Kernel, measure: ControlMeasure, alpha: float) -> SeriesIntegrand:
    """``H(t, r, v) = c_alpha m(S)**(1/alpha) r**(-1/alpha) f(t, v)``, signed by Rademacher marks."""
    coef = c_alpha(alpha) * measure.total_mass ** (1.0 / alpha)
    return SeriesIntegrand(kernel=kernel, amplitude=PowerAmplitude(coef, alpha), symmetric=True,
                           monotone_norm=True)


def verify_monotone_norm(
    integrand: SeriesIntegrand,
    measure: ControlMeasure,
    stream: RngStream,
    n_marks: int = 100,
    radii: Optional[np.ndarray] = None,
    tol: float = 1e-12,
) -> bool:
    """Check numerically that ``r -> sup_t |H(., r, v)|`` is nonincreasing."""
    if radii is None:
        radii = np.logspace(-6, 6, 49)
    v = measure.sample_marks(stream, n_marks)
    norms = np.stack([integrand.sup_norm(np.full(v.size, r), v) for r in radii])
    return bool(np.all(norms[1:] <= norms[:-1] + tol))
