"""Truncated shot-noise and LePage series paths, centering, and convergence diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kernel import Kernel, SeriesIntegrand, c_alpha
from .measure import ControlMeasure
from .path import CadlagPath, JumpLedger, sup_norm_diff, uniform_grid
from .randomness import (
    ARRIVALS,
    AUX,
    MARKS,
    SIGNS,
    RngStream,
    arrivals_until,
    gamma_arrivals,
    rademacher,
)

__all__ = [
    "SeriesConfig",
    "Terms",
    "c_alpha",
    "draw_terms",
    "lepage_sample_path",
    "shot_noise_sample_path",
    "CenteringTable",
    "QuadratureSpec",
    "compute_centering",
    "DiagnosticsReport",
    "tail_diagnostics",
    "ConvergenceReport",
    "partial_sum_ladder",
]


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation and sampling settings.  Exactly one of ``terms``/``level`` is set."""

    alpha: float
    terms: Optional[int] = None
    level: Optional[float] = None
    replicates: int = 1
    grid: int = 4096
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if (self.terms is None) == (self.level is None):
            raise ValueError("set exactly one of terms (J) or level (u)")
        if self.terms is not None and self.terms < 0:
            raise ValueError("terms must be >= 0")
        if self.level is not None and self.level < 0:
            raise ValueError("level must be >= 0")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.grid < 1:
            raise ValueError("grid resolution must be >= 1")

    def replicate_stream(self, index: int) -> RngStream:
        return RngStream(self.seed, (index,))


@dataclass(frozen=True, eq=False)
class Terms:
    """Series ingredients for one replicate, indexed by term ``j = 1..n``."""

    arrivals: np.ndarray
    signs: np.ndarray
    marks: np.ndarray

    def __len__(self) -> int:
        return int(self.arrivals.size)

    def head(self, n: int) -> Terms:
        return Terms(self.arrivals[:n], self.signs[:n], self.marks[:n])


def draw_terms(stream: RngStream, measure: ControlMeasure, terms: Optional[int] = None,
               level: Optional[float] = None) -> Terms:
    """Arrivals, signs and marks from the replicate's three substreams."""
    if level is not None:
        arrivals = arrivals_until(stream.child(ARRIVALS), level)
    else:
        arrivals = gamma_arrivals(stream.child(ARRIVALS), terms)
    n = arrivals.size
    signs = rademacher(stream.child(SIGNS), n)
    marks = measure.sample_marks(stream.child(MARKS), n)
    return Terms(arrivals, signs, marks)


def _grid_with_jumps(resolution: int, jump_times: np.ndarray) -> np.ndarray:
    base = uniform_grid(resolution)
    inside = jump_times[(jump_times >= 0.0) & (jump_times <= 1.0)]
    return np.union1d(base, inside)


def lepage_weights(terms: Terms, alpha: float, total_mass: float) -> np.ndarray:
    """``c_alpha m(S)**(1/alpha) eps_j Gamma_j**(-1/alpha)``."""
    coef = c_alpha(alpha) * total_mass ** (1.0 / alpha)
    return terms.signs * (coef * terms.arrivals ** (-1.0 / alpha))


def path_from_weights(kernel: Kernel, weights: np.ndarray, marks: np.ndarray,
                      resolution: int, grid: Optional[np.ndarray] = None) -> CadlagPath:
    """Evaluate ``sum_j w_j f(t, V_j)`` and record every term jump in the ledger."""
    jumps = kernel.jumps(marks)
    ledger = JumpLedger(jumps.time, jumps.size * weights[jumps.term], jumps.term + 1)
    if grid is None:
        grid = _grid_with_jumps(resolution, ledger.times)
    return CadlagPath(grid, kernel.accumulate(grid, weights, marks), ledger)


def lepage_sample_path(kernel: Kernel, measure: ControlMeasure, config: SeriesConfig,
                       stream: RngStream) -> CadlagPath:
    """One truncated LePage path ``X_J(t)`` (or all terms with ``Gamma_j <= u``)."""
    terms = draw_terms(stream, measure, config.terms, config.level)
    w = lepage_weights(terms, config.alpha, measure.total_mass)
    return path_from_weights(kernel, w, terms.marks, config.grid)


# ---------------------------------------------------------------------------
# centering


@dataclass(frozen=True, eq=False)
class CenteringTable:
    """``A^u(t)`` on a time grid."""

    level: float
    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t) -> np.ndarray:
        return np.interp(t, self.grid, self.values)


@dataclass(frozen=True)
class QuadratureSpec:
    """Log-spaced Gauss-Legendre panels on ``[u 10**-decades, u]``.

    The stretch ``[0, u 10**-decades]`` is handled by its left-endpoint value;
    the truncated integrand is bounded by 1 so the error there is below
    ``u 10**-decades``.
    """

    decades: int = 10
    panels_per_decade: int = 40
    order: int = 4

    def nodes(self, u: float) -> tuple[np.ndarray, np.ndarray]:
        edges = u * 10.0 ** np.linspace(-self.decades, 0.0, self.decades * self.panels_per_decade + 1)
        x, w = np.polynomial.legendre.leggauss(self.order)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wr = (half[:, None] * w[None, :]).ravel()
        return r, wr


def truncate(x: np.ndarray) -> np.ndarray:
    """Continuous truncation ``x / max(1, |x|)``."""
    return x / np.maximum(1.0, np.abs(x))


def compute_centering(
    integrand: SeriesIntegrand,
    measure: ControlMeasure,
    u: float,
    grid: np.ndarray,
    stream: RngStream,
    quadrature: QuadratureSpec = QuadratureSpec(),
    mc_draws: int = 1024,
) -> CenteringTable:
    """``A^u(t) = int_0^u E[[H(t, r, V)]] dr`` by MC over ``V`` and r-quadrature."""
    if not u > 0:
        raise ValueError("u must be positive")
    grid = np.asarray(grid, dtype=float)
    v = measure.sample_marks(stream.child(MARKS), mc_draws)
    eps = rademacher(stream.child(SIGNS), mc_draws) if integrand.symmetric else np.ones(mc_draws)
    r_nodes, r_weights = quadrature.nodes(u)
    r_lo = u * 10.0 ** (-quadrature.decades)

    if integrand.separable:
        base = integrand.kernel.eval(grid[:, None], v[None, :]) * eps[None, :]

        def mean_trunc(r):
            a = float(np.asarray(integrand.amplitude(np.array([r])), float)[0])
            return truncate(a * base).mean(axis=1)
    else:
        def mean_trunc(r):
            h = integrand(grid[:, None], np.full((1, mc_draws), r), v[None, :]) * eps[None, :]
            return truncate(h).mean(axis=1)

    total = r_lo * mean_trunc(r_lo)
    for r, w in zip(r_nodes, r_weights):
        total = total + w * mean_trunc(r)
    if not np.all(np.isfinite(total)):
        raise ValueError("integrand produced non-finite values")
    return CenteringTable(float(u), grid.copy(), total)


def shot_noise_sample_path(
    integrand: SeriesIntegrand,
    measure: ControlMeasure,
    config: SeriesConfig,
    stream: RngStream,
    centering: Optional[CenteringTable] = None,
) -> CadlagPath:
    """``Y^u(t) = b(t) + sum_{Gamma_j <= u} H(t, Gamma_j, V_j) - A^u(t)`` on the grid.

    Symmetric integrands take signs from the replicate's sign substream and
    need no centering.  Otherwise the table must be built for ``config.level``.
    """
    if not integrand.symmetric:
        if config.level is None:
            raise ValueError("non-symmetric integrands need level truncation (u) and a centering table")
        if centering is None:
            raise ValueError("non-symmetric integrand requires a centering table")
        if centering.level != config.level:
            raise ValueError(f"centering built for u={centering.level}, config has u={config.level}")
    terms = draw_terms(stream, measure, config.terms, config.level)
    signs = terms.signs if integrand.symmetric else np.ones(len(terms))
    jumps = integrand.term_jumps(terms.arrivals, terms.marks)
    ledger = JumpLedger(jumps.time, jumps.size * signs[jumps.term], jumps.term + 1)
    grid = _grid_with_jumps(config.grid, ledger.times)

    if integrand.separable:
        w = signs * np.asarray(integrand.amplitude(terms.arrivals), float)
        values = integrand.kernel.accumulate(grid, w, terms.marks)
    else:
        values = np.zeros(grid.size)
        step = max(1, 2**22 // grid.size)
        for k in range(0, len(terms), step):
            sl = slice(k, k + step)
            h = integrand(grid[:, None], terms.arrivals[None, sl], terms.marks[None, sl])
            values += h @ signs[sl]
    values = values + integrand.b(grid)
    if centering is not None and not integrand.symmetric:
        values = values - centering(grid)
    return CadlagPath(grid, values, ledger)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    """Numerical checks that the integrand's norms vanish along the series and
    that ``int_0^inf P(||H(., r, V)|| > 1) dr`` is finite."""

    term_norms: np.ndarray
    last_decile_max: float
    tail_integral: float
    tail_radius: float
    divergent: bool
    mc_draws: int

    def to_dict(self) -> dict:
        n = self.term_norms.size
        return {
            "terms": int(n),
            "first_norm": float(self.term_norms[0]) if n else None,
            "last_norm": float(self.term_norms[-1]) if n else None,
            "last_decile_max": self.last_decile_max,
            "tail_integral": self.tail_integral,
            "tail_radius": self.tail_radius,
            "divergent": self.divergent,
            "mc_draws": self.mc_draws,
        }


R_MIN = 1e-12
R_MAX = 1e6


def tail_diagnostics(
    integrand: SeriesIntegrand,
    measure: ControlMeasure,
    j_max: int,
    stream: RngStream,
    mc_draws: int = 4096,
    grid: Optional[np.ndarray] = None,
) -> DiagnosticsReport:
    """Term norms ``sup_t |H(t, Gamma_j, V_j)|`` and the tail-integral estimate.

    With a nonincreasing norm in ``r`` the event ``||H(., r, v)|| > 1`` is
    ``r < rho(v)``, so the integral equals ``E rho(V)``; ``rho`` is found per
    Monte Carlo mark by bisection in ``log r``.  Otherwise ``P(...)`` is
    estimated on a log grid and integrated by the trapezoid rule.
    """
    if j_max < 100:
        raise ValueError("j_max must be >= 100")
    arrivals = gamma_arrivals(stream.child(ARRIVALS), j_max)
    marks = measure.sample_marks(stream.child(MARKS), j_max)
    norms = integrand.sup_norm(arrivals, marks, grid)
    decile = norms[int(0.9 * j_max):]
    last_decile_max = float(decile.max())

    v = measure.sample_marks(stream.child(AUX), mc_draws)
    if integrand.separable:
        section = integrand.kernel.section_sup_abs(v, grid)

        def norm(r):
            return np.abs(np.asarray(integrand.amplitude(r), float)) * section
    else:
        def norm(r):
            return integrand.sup_norm(r, v, grid)

    if integrand.monotone_norm:
        lo = np.full(mc_draws, np.log(R_MIN))
        hi = np.full(mc_draws, np.log(R_MAX))
        above_hi = norm(np.exp(hi)) > 1.0
        above_lo = norm(np.exp(lo)) > 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            up = norm(np.exp(mid)) > 1.0
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        rho = np.where(above_lo, np.exp(0.5 * (lo + hi)), 0.0)
        rho = np.where(above_hi, R_MAX, rho)
        divergent = bool(above_hi.any())
        integral = float(rho.mean())
        radius = float(rho.max())
    else:
        r = np.logspace(np.log10(R_MIN), np.log10(R_MAX), 1201)
        prob = np.array([np.mean(norm(np.full(mc_draws, x)) > 1.0) for x in r])
        divergent = bool(prob[-1] >= 1e-6)
        live = np.flatnonzero(prob >= 1e-6)
        cut = r.size - 1 if divergent else (live[-1] + 1 if live.size else 0)
        radius = float(r[cut])
        p, x = prob[: cut + 1], r[: cut + 1]
        integral = float(R_MIN * prob[0] + np.sum(0.5 * (p[1:] + p[:-1]) * np.diff(x)))
    return DiagnosticsReport(norms, last_decile_max, integral, radius, divergent, mc_draws)


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Coupled-stream uniform distances between consecutive ladder truncations."""

    ladder: tuple[int, ...]
    diffs: np.ndarray  # (replicates, len(ladder) - 1)
    medians: np.ndarray = field(init=False)
    p90: np.ndarray = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.diffs, dtype=float)
        if d.shape[1] == 0:
            med = p90 = np.empty(0)
        else:
            med = np.median(d, axis=0)
            p90 = np.quantile(d, 0.9, axis=0)
        object.__setattr__(self, "medians", med)
        object.__setattr__(self, "p90", p90)

    def to_dict(self) -> dict:
        pairs = list(zip(self.ladder[:-1], self.ladder[1:]))
        return {
            "ladder": list(self.ladder),
            "replicates": int(self.diffs.shape[0]),
            "pairs": [
                {"from": int(a), "to": int(b), "median": float(m), "p90": float(q)}
                for (a, b), m, q in zip(pairs, self.medians, self.p90)
            ],
            "medians_strictly_decreasing": bool(np.all(np.diff(self.medians) < 0)),
        }


def ladder_differences(kernel: Kernel, measure: ControlMeasure, alpha: float,
                       ladder: Sequence[int], stream: RngStream, resolution: int = 4096) -> np.ndarray:
    """Uniform distances ``||S_{J'} - S_J||`` for one replicate, all partial sums
    built from the same arrivals, signs and marks."""
    terms = draw_terms(stream, measure, terms=int(ladder[-1]))
    w = lepage_weights(terms, alpha, measure.total_mass)
    full = kernel.jumps(terms.marks)
    grid = _grid_with_jumps(resolution, full.time)
    paths = [path_from_weights(kernel, w[:J], terms.marks[:J], resolution, grid) for J in ladder]
    return np.array([sup_norm_diff(b, a) for a, b in zip(paths[:-1], paths[1:])])


def partial_sum_ladder(kernel: Kernel, measure: ControlMeasure, alpha: float,
                       ladder: Sequence[int], replicates: int, stream: RngStream,
                       resolution: int = 4096) -> ConvergenceReport:
    """Median and 90th percentile of ``||S_{J'} - S_J||`` over replicates.

    Replicate ``i`` draws from ``stream.child(i)``.
    """
    ladder = tuple(int(J) for J in ladder)
    if not ladder:
        raise ValueError("ladder must not be empty")
    if any(b < a for a, b in zip(ladder[:-1], ladder[1:])) or ladder[0] < 0:
        raise ValueError("ladder must be nondecreasing and non-negative")
    rows = [ladder_differences(kernel, measure, alpha, ladder, stream.child(i), resolution)
            for i in range(replicates)]
    return ConvergenceReport(ladder, np.array(rows).reshape(replicates, len(ladder) - 1))
