"""Replicate orchestration: simulate once, read off every jump functional.

Replicate ``i`` always draws from ``RngStream(seed, (i,))`` and results are
assembled in replicate order, so output does not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .kernel import Kernel, PowerAmplitude, c_alpha, separable_integrand
from .measure import ControlMeasure
from .path import max_abs_jump, max_jump, uniform_grid, vp_of_jumps
from .randomness import REFERENCE, RngStream
from .series import (
    CenteringTable,
    SeriesConfig,
    compute_centering,
    draw_terms,
    lepage_weights,
    path_from_weights,
    shot_noise_sample_path,
)

# reference-stream slots below REFERENCE
REF_SAS = 1
REF_POSITIVE_STABLE = 2
REF_CENTERING = 3


@dataclass(frozen=True)
class Model:
    """What to simulate: ``lepage`` (symmetric, Rademacher signs) or
    ``positive`` (one-sided shot noise, centred, level truncation only)."""

    kernel: Kernel
    measure: ControlMeasure
    config: SeriesConfig
    series: str = "lepage"
    mc_draws: int = 1024

    def __post_init__(self):
        if self.series not in ("lepage", "positive"):
            raise ValueError(f"series must be 'lepage' or 'positive', got {self.series!r}")
        if self.series == "positive" and self.config.level is None:
            raise ValueError("series=positive needs level truncation (level=u), not terms")


@dataclass(frozen=True, eq=False)
class Replicate:
    index: int
    grid_values: np.ndarray  # path on the uniform grid
    ledger_times: np.ndarray
    ledger_sizes: np.ndarray
    ledger_terms: np.ndarray
    x1: float
    max_abs_jump: float
    max_jump: float
    identity_value: float  # max_j |w_j| sup_t |Delta f(t, V_j)| from the terms
    vp: tuple  # V_p of the ledger for each requested p


def _one(args):
    model, centering, index, p_values, keep_path, post = args
    rep = _simulate(model, centering, index, p_values, keep_path)
    return rep if post is None else post(rep)


def _simulate(model, centering, index, p_values, keep_path) -> Replicate:
    cfg = model.config
    stream = cfg.replicate_stream(index)
    uniform = uniform_grid(cfg.grid)
    if model.series == "lepage":
        terms = draw_terms(stream, model.measure, cfg.terms, cfg.level)
        w = lepage_weights(terms, cfg.alpha, model.measure.total_mass)
        path = path_from_weights(model.kernel, w, terms.marks, cfg.grid)
        absmax = model.kernel.jump_extremes(terms.marks)[0]
        identity = float(np.max(np.abs(w) * absmax)) if len(terms) else 0.0
    else:
        path = shot_noise_sample_path(_positive_integrand(model), model.measure, cfg, stream, centering)
        identity = max_abs_jump(path.ledger)
    led = path.ledger
    return Replicate(
        index,
        path(uniform) if keep_path else np.empty(0),
        led.times if keep_path else np.empty(0),
        led.sizes if keep_path else np.empty(0),
        led.terms if keep_path else np.empty(0, dtype=np.int64),
        float(path.values[-1]),
        max_abs_jump(led),
        max_jump(led),
        identity,
        tuple(vp_of_jumps(led, p) for p in p_values),
    )


def _positive_integrand(model: Model):
    coef = c_alpha(model.config.alpha) * model.measure.total_mass ** (1.0 / model.config.alpha)
    return separable_integrand(model.kernel, PowerAmplitude(coef, model.config.alpha), symmetric=False)


def centering_for(model: Model) -> Optional[CenteringTable]:
    if model.series != "positive":
        return None
    cfg = model.config
    return compute_centering(_positive_integrand(model), model.measure, cfg.level,
                             uniform_grid(cfg.grid), RngStream(cfg.seed, (REFERENCE, REF_CENTERING)),
                             mc_draws=model.mc_draws)


def run_replicates(model: Model, p_values: Sequence[float] = (), workers: int = 1,
                   keep_path: bool = True, chunksize: int = 16,
                   post: Optional[Callable] = None) -> list:
    """All replicates of ``model``, in index order.

    ``post`` (a picklable top-level function) maps each :class:`Replicate`
    inside the worker, e.g. to formatted output, before results are gathered.
    """
    centering = centering_for(model)
    jobs = [(model, centering, i, tuple(p_values), keep_path, post) for i in range(model.config.replicates)]
    if workers <= 1:
        return [_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, jobs, chunksize=chunksize))
