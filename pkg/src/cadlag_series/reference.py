"""Target laws for jump functionals and the scale parameters that go with them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kernel import Kernel, c_alpha
from .measure import ControlMeasure
from .randomness import REFERENCE, RngStream, sample_positive_stable


class ContinuousKernelWarning(UserWarning):
    """The kernel has no jumps on a set of positive measure; the jump functional is 0."""


@dataclass(frozen=True)
class FrechetLaw:
    alpha: float
    sigma: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.sigma > 0):
            raise ValueError("Frechet shape and scale must be positive")

    def cdf(self, x):
        return frechet_cdf(self, x)

    def sample(self, stream: RngStream, count: int) -> np.ndarray:
        # sigma * E**(-1/alpha) with E ~ Exp(1)
        e = stream.generator().standard_exponential(int(count))
        return self.sigma * e ** (-1.0 / self.alpha)


def frechet_cdf(law: FrechetLaw, x):
    """``exp(-(x / sigma)**(-alpha))`` for ``x > 0``, else 0."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    z = np.where(pos, x, 1.0) / law.sigma
    out = np.where(pos, np.exp(-(z ** (-law.alpha))), 0.0)
    return float(out) if out.ndim == 0 else out


def _integrate(measure: ControlMeasure, g) -> float:
    return measure.integrate(g).value


def _warn_if_zero(value: float, what: str) -> float:
    if value == 0.0:
        warnings.warn(f"kernel has no jumps m-a.e.; {what} is identically 0", ContinuousKernelWarning, stacklevel=3)
    return value


def scale_abs_jump(kernel: Kernel, measure: ControlMeasure, alpha: float) -> float:
    """Frechet scale of the largest absolute jump:
    ``c_alpha (int sup_t |Delta f(t, s)|**alpha m(ds))**(1/alpha)``.
    """
    moment = _integrate(measure, lambda s: kernel.jump_extremes(s)[0] ** alpha)
    return _warn_if_zero(c_alpha(alpha) * moment ** (1.0 / alpha), "the largest jump")


@dataclass(frozen=True)
class PositiveJumpScale:
    """Two candidate Frechet scales for the largest positive jump.

    ``proof_form`` is ``c_alpha (1/2 int a**alpha dm + 1/2 int b**alpha dm)**(1/alpha)``
    with ``a = sup_t Delta f`` and ``b = -inf_t Delta f`` (both floored at 0);
    ``displayed_form`` is ``c_alpha / 2 [(int a**alpha)**(1/alpha) + (int b**alpha)**(1/alpha)]``.
    They agree when ``alpha = 1`` or ``a = b``.
    """

    proof_form: float
    displayed_form: float


def scale_pos_jump(kernel: Kernel, measure: ControlMeasure, alpha: float) -> PositiveJumpScale:
    up = _integrate(measure, lambda s: kernel.jump_extremes(s)[1] ** alpha)
    down = _integrate(measure, lambda s: kernel.jump_extremes(s)[2] ** alpha)
    c = c_alpha(alpha)
    proof = c * (0.5 * up + 0.5 * down) ** (1.0 / alpha)
    shown = 0.5 * c * (up ** (1.0 / alpha) + down ** (1.0 / alpha))
    _warn_if_zero(proof, "the largest positive jump")
    return PositiveJumpScale(proof, shown)


def scale_vp(kernel: Kernel, measure: ControlMeasure, alpha: float, p: float) -> float:
    """Scale of the positive ``(alpha/p)``-stable law of ``V_p(X)``:
    ``c_alpha**p / c_{alpha/p} * (int V_p(f(., s))**(alpha/p) m(ds))**(p/alpha)``.

    Returns 0 (with a warning) for kernels continuous m-a.e., where
    ``V_p(X) = 0``.  Otherwise ``p <= alpha`` is rejected: ``V_p(X)`` is then
    infinite almost surely.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    moment = _integrate(measure, lambda s: kernel.section_vp(s, p) ** (alpha / p))
    if moment == 0.0:
        return _warn_if_zero(0.0, "V_p(X)")
    if p <= alpha:
        raise ValueError(
            f"V_p not a.s. finite unless kernel continuous: need p > alpha (p={p}, alpha={alpha})"
        )
    return c_alpha(alpha) ** p / c_alpha(alpha / p) * moment ** (p / alpha)


REFERENCE_SIZE = 10**6


@lru_cache(maxsize=16)
def positive_stable_reference(alpha_prime: float, seed: int = 0, size: int = REFERENCE_SIZE) -> np.ndarray:
    """Sorted unit-scale positive stable sample; the empirical CDF stands in for the true one."""
    x = sample_positive_stable(RngStream(seed, (REFERENCE, 7)), alpha_prime, 1.0, size)
    x.sort()
    x.setflags(write=False)
    return x


def positive_stable_cdf(alpha_prime: float, scale: float, x, seed: int = 0):
    ref = positive_stable_reference(float(alpha_prime), seed)
    return np.searchsorted(ref, np.asarray(x, dtype=float) / scale, side="right") / ref.size


def frechet_median(law: FrechetLaw) -> float:
    return law.sigma * math.log(2.0) ** (-1.0 / law.alpha)
