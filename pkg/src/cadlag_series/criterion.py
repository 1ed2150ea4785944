"""Numerical check of the increment-moment conditions for a cadlag modification,
and the sine-series example whose uniform convergence does not carry over to
p-variation norms.

The conditions, with ``F1 = F2 = identity``:

* (B1) ``I1(t1, t2) = int |f(t2, s) - f(t1, s)|**p1 m(ds) <= C |t2 - t1|**beta1``
* (B2) ``I2(t1, t, t2) = int |(f(t, s) - f(t1, s)) (f(t2, s) - f(t, s))|**p2 m(ds)
  <= C |t2 - t1|**(2 beta2)``

with ``p1 > alpha``, ``p2 > alpha/2`` and ``beta1, beta2 > 1/2``, for
``alpha`` in ``(1, 2)``.  Exponents are fitted by log-log least squares over
grid pairs at most ``MAX_GAP`` apart.  Passing is numerical evidence for a
sufficient condition, never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import Kernel
from .measure import ControlMeasure
from .randomness import AUX, RngStream

MAX_GAP = 0.25
MIN_GRID = 16
Z_95 = 1.959963984540054
# a fitted integral below this relative level counts as zero
ZERO_TOL = 1e-13
# largest point count a targeted partition may allocate
MAX_POINTS = 2**25


@dataclass(frozen=True, eq=False)
class ExponentFit:
    """Result of one scan.  ``beta`` is ``nan`` when nothing can be fitted."""

    beta: float
    half_width: float
    pairs: np.ndarray  # (n, 2): t1, t2
    values: np.ndarray  # I1 or max_t I2 per pair
    identically_zero: bool
    n_fit: int

    @property
    def lower(self) -> float:
        return self.beta - self.half_width

    def table(self) -> list[dict]:
        return [{"t1": float(a), "t2": float(b), "value": float(v)}
                for (a, b), v in zip(self.pairs, self.values)]


def _check_grid(time_grid) -> np.ndarray:
    g = np.asarray(time_grid, dtype=float).ravel()
    if g.size < MIN_GRID:
        raise ValueError(f"time grid needs at least {MIN_GRID} points")
    if np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] > 1:
        raise ValueError("time grid must increase strictly inside [0, 1]")
    return g


def _section_matrix(kernel: Kernel, measure: ControlMeasure, grid: np.ndarray):
    """``F[i, k] = f(grid[i], s_k)`` on one quadrature rule shared by all times.

    The rule breaks at every mark discontinuity of every ``f(t_i, .)``, so
    piecewise-constant integrands are integrated exactly.
    """
    bps = [np.asarray(kernel.s_breakpoints(t), dtype=float).ravel() for t in grid]
    breakpoints = np.unique(np.concatenate(bps)) if bps else np.empty(0)
    s, w = measure.rule(breakpoints)
    return kernel.eval(grid[:, None], s[None, :]), w


def _fit(gaps: np.ndarray, values: np.ndarray, scale: float):
    """Slope of ``log values`` on ``log gaps`` and a 95% half-width from its standard error."""
    positive = values > ZERO_TOL * max(scale, np.finfo(float).tiny)
    use = (gaps <= MAX_GAP + 1e-12) & positive
    n = int(use.sum())
    if n < 2:
        return math.nan, math.nan, n
    x = np.log(gaps[use])
    y = np.log(values[use])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0:
        return math.nan, math.nan, n
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    if n > 2:
        resid = y - y.mean() - slope * xc
        se = math.sqrt(float(np.dot(resid, resid)) / (n - 2) / sxx)
    else:
        se = 0.0
    return slope, Z_95 * se, n


def b1_scan(kernel: Kernel, measure: ControlMeasure, p1: float, time_grid) -> ExponentFit:
    """``I1`` for every grid pair ``t1 < t2`` and the fitted ``beta1``."""
    if not p1 > 0:
        raise ValueError("p1 must be positive")
    grid = _check_grid(time_grid)
    F, w = _section_matrix(kernel, measure, grid)
    i, k = np.triu_indices(grid.size, 1)
    values = np.empty(i.size)
    pos = 0
    for a in range(grid.size - 1):
        block = np.abs(F[a + 1 :] - F[a]) ** p1 @ w
        values[pos : pos + block.size] = block
        pos += block.size
    pairs = np.column_stack([grid[i], grid[k]])
    scale = float(np.abs(F).max() ** p1 * measure.total_mass) if F.size else 0.0
    zero = not np.any(values > ZERO_TOL * max(scale, np.finfo(float).tiny))
    slope, hw, n = _fit(grid[k] - grid[i], values, scale)
    return ExponentFit(slope, hw, pairs, values, zero, n)


def b2_scan(kernel: Kernel, measure: ControlMeasure, p2: float, time_grid) -> ExponentFit:
    """``max_t I2(t1, t, t2)`` for every grid pair and the fitted ``beta2 = slope / 2``."""
    if not p2 > 0:
        raise ValueError("p2 must be positive")
    grid = _check_grid(time_grid)
    F, w = _section_matrix(kernel, measure, grid)
    i, k = np.triu_indices(grid.size, 1)
    values = np.zeros(i.size)
    for idx, (a, b) in enumerate(zip(i, k)):
        if b - a < 2:
            continue  # no interior grid time
        mid = F[a + 1 : b]
        prod = np.abs((mid - F[a]) * (F[b] - mid)) ** p2
        values[idx] = float((prod @ w).max())
    pairs = np.column_stack([grid[i], grid[k]])
    scale = float(np.abs(F).max() ** (2 * p2) * measure.total_mass) if F.size else 0.0
    zero = not np.any(values > ZERO_TOL * max(scale, np.finfo(float).tiny))
    slope, hw, n = _fit(grid[k] - grid[i], values, scale)
    return ExponentFit(0.5 * slope, 0.5 * hw, pairs, values, zero, n)


@dataclass(frozen=True, eq=False)
class CriterionReport:
    alpha: float
    p1: float
    p2: float
    b1: ExponentFit
    b2: ExponentFit
    p1_ok: bool = field(init=False)
    p2_ok: bool = field(init=False)
    beta1_ok: bool = field(init=False)
    beta2_ok: bool = field(init=False)
    verdict: str = field(init=False)

    def __post_init__(self):
        # an identically vanishing integral satisfies its bound for any exponent
        b1_ok = self.b1.identically_zero or self.b1.lower > 0.5
        b2_ok = self.b2.identically_zero or self.b2.lower > 0.5
        object.__setattr__(self, "p1_ok", self.p1 > self.alpha)
        object.__setattr__(self, "p2_ok", self.p2 > self.alpha / 2)
        object.__setattr__(self, "beta1_ok", bool(b1_ok))
        object.__setattr__(self, "beta2_ok", bool(b2_ok))
        ok = self.p1_ok and self.p2_ok and self.beta1_ok and self.beta2_ok
        object.__setattr__(self, "verdict", "satisfied (numerically)" if ok else "not established")

    @property
    def satisfied(self) -> bool:
        return self.verdict.startswith("satisfied")

    @property
    def time_constant(self) -> bool:
        return self.b1.identically_zero

    def to_dict(self, tables: bool = False) -> dict:
        def fit(f: ExponentFit, name: str) -> dict:
            d = {
                f"{name}_hat": None if math.isnan(f.beta) else f.beta,
                "half_width": None if math.isnan(f.half_width) else f.half_width,
                "pairs_fitted": f.n_fit,
                "identically_zero": f.identically_zero,
            }
            if tables:
                d["table"] = f.table()
            return d

        return {
            "alpha": self.alpha,
            "p1": self.p1,
            "p2": self.p2,
            "b1": fit(self.b1, "beta1"),
            "b2": fit(self.b2, "beta2"),
            "flags": {
                "p1_gt_alpha": self.p1_ok,
                "p2_gt_half_alpha": self.p2_ok,
                "beta1_gt_half": self.beta1_ok,
                "beta2_gt_half": self.beta2_ok,
            },
            "kernel_time_constant": self.time_constant,
            "verdict": self.verdict,
        }


def cadlag_verdict(kernel: Kernel, measure: ControlMeasure, alpha: float,
                   p1: float, p2: float, time_grid) -> CriterionReport:
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"the cadlag criterion assumes 1 < alpha < 2, got alpha={alpha}")
    return CriterionReport(float(alpha), float(p1), float(p2),
                           b1_scan(kernel, measure, p1, time_grid),
                           b2_scan(kernel, measure, p2, time_grid))


# ---------------------------------------------------------------------------
# sine-series example


def demo_ratio(p: float) -> int:
    """``r = 4**floor(p/(p-1) + 1)``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    return 4 ** int(math.floor(p / (p - 1) + 1))


def _amplitude(j: np.ndarray, r: int, p: float) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    return r ** (-j / p) / np.sqrt(np.log(j + 1))


def _sin_pi_rational(num: np.ndarray, den: int) -> np.ndarray:
    """``sin(pi num / den)`` with ``num`` reduced mod ``2 den`` in integers first."""
    return np.sin(np.pi * (np.mod(num, 2 * den) / den))


def _block_sup(z: np.ndarray, j_lo: int, j_hi: int, r: int, p: float, per_cycle: int) -> float:
    """``sup_t |sum_{j_lo <= j <= j_hi} z_j f_j(t)|`` on a fine grid over one period.

    Every ``f_j`` in the block has period dividing ``2 / r**j_lo``.  Grid points
    are ``t_m = m / K`` with ``K = per_cycle * r**j_hi``, so the phase
    ``r**j t_m = m / (per_cycle r**(j_hi - j))`` is reduced exactly.
    """
    span = r ** (j_hi - j_lo)
    m = np.arange(2 * per_cycle * span, dtype=np.int64)
    total = np.zeros(m.size)
    for j in range(j_lo, j_hi + 1):
        den = per_cycle * r ** (j_hi - j)
        total += z[j - 1] * _amplitude(j, r, p) * _sin_pi_rational(m, den)
    return float(np.abs(total).max())


def _extrema_terms(z: np.ndarray, n: int, r: int, p: float):
    """Partial sum ``S_n`` and the last term ``z_n f_n`` at ``0``, the extrema
    ``(2i+1)/(2 r**n)`` of ``f_n``, and ``1`` (every ``f_j`` vanishes at both ends)."""
    rn = r**n
    num = 2 * np.arange(rn, dtype=np.int64) + 1
    total = np.zeros(rn + 2)
    last = np.zeros(rn + 2)
    for j in range(1, n + 1):
        # r**j (2i+1) / (2 r**n) = (2i+1) / (2 r**(n-j))
        last[1:-1] = z[j - 1] * _amplitude(j, r, p) * _sin_pi_rational(num, 2 * r ** (n - j))
        total += last
    return total, last


def _pvar_on(values: np.ndarray, p: float) -> float:
    return float(np.sum(np.abs(np.diff(values)) ** p) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class DemoReport:
    p: float
    r: int
    j_max: int
    z: np.ndarray
    sup_norms: np.ndarray  # ||f_j||_inf
    blocks: list  # (k, j_lo, j_hi)
    increments: np.ndarray  # ||S_{j_hi} - S_{j_lo - 1}||_inf per block
    term_bounds: np.ndarray  # lower bound of ||z_j f_j||_{BV_p}
    cumulative_bounds: np.ndarray  # (sum_{i <= j} term_bounds**p)**(1/p)
    partial_sum_bounds: np.ndarray  # V_p of S_j over the extrema of f_j

    @property
    def increments_decreasing(self) -> bool:
        """Block increments strictly decrease from block ``k = 2`` on."""
        inc = self.increments
        return bool(inc.size < 3 or np.all(np.diff(inc[1:]) < 0))

    @property
    def cumulative_increasing(self) -> bool:
        return bool(np.all(np.diff(self.cumulative_bounds) > 0))

    def rows(self) -> list[dict]:
        return [
            {
                "j": j,
                "z": float(self.z[j - 1]),
                "sup_norm": float(self.sup_norms[j - 1]),
                "term_bound": float(self.term_bounds[j - 1]),
                "cumulative_bound": float(self.cumulative_bounds[j - 1]),
                "partial_sum_bound": float(self.partial_sum_bounds[j - 1]),
            }
            for j in range(1, self.j_max + 1)
        ]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "r": self.r,
            "j_max": self.j_max,
            "terms": self.rows(),
            "increments": [
                {"k": k, "j_from": lo, "j_to": hi, "sup_norm": float(v)}
                for (k, lo, hi), v in zip(self.blocks, self.increments)
            ],
            "increments_decreasing_from_k2": self.increments_decreasing,
            "cumulative_bound_increasing": self.cumulative_increasing,
        }


def counterexample_demo(p: float, j_max: int, stream: RngStream, per_cycle: int = 64) -> DemoReport:
    """Gaussian sine series ``sum_j Z_j f_j`` with
    ``f_j(t) = r**(-j/p) log(j+1)**(-1/2) sin(r**j pi t)``.

    Reports dyadic block increments in the uniform norm, which shrink, next to
    p-variation lower bounds from partitions at the extrema of ``f_j``, whose
    cumulative sum keeps growing.  Evaluating the partition for ``f_j`` takes
    ``r**j`` points, so ``r**j_max`` must not exceed ``MAX_POINTS``.
    """
    r = demo_ratio(p)
    j_max = int(j_max)
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    if float(r) ** j_max > MAX_POINTS:
        raise ValueError(
            f"j_max={j_max} needs r**j_max = {r}**{j_max} partition points; "
            f"the limit is {MAX_POINTS} (j_max <= {int(math.log(MAX_POINTS, r) + 1e-9)} for r={r})"
        )
    z = stream.child(AUX).generator().standard_normal(j_max)
    j = np.arange(1, j_max + 1)
    sup_norms = _amplitude(j, r, p)

    blocks = []
    k = 0
    while 2**k + 1 <= j_max:
        lo, hi = 2**k + 1, min(2 ** (k + 1), j_max)
        blocks.append((k, lo, hi))
        k += 1
    for _, lo, hi in blocks:
        if 2 * per_cycle * float(r) ** (hi - lo) > MAX_POINTS:
            raise ValueError(f"block {lo}..{hi} needs more than {MAX_POINTS} grid points")
    increments = np.array([_block_sup(z, lo, hi, r, p, per_cycle) for _, lo, hi in blocks])

    term_bounds = np.empty(j_max)
    partial = np.empty(j_max)
    for n in range(1, j_max + 1):
        total, last = _extrema_terms(z, n, r, p)
        term_bounds[n - 1] = _pvar_on(last, p)
        partial[n - 1] = _pvar_on(total, p)
    cumulative = np.cumsum(term_bounds**p) ** (1.0 / p)
    return DemoReport(float(p), r, j_max, z, sup_norms, blocks, increments,
                      term_bounds, cumulative, partial)

