from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from scipy.optimize import brentq

from cadlag_series.kernel import FunctionKernel, c_alpha, indicator_kernel, ou_kernel
from cadlag_series.measure import atoms, lebesgue
from cadlag_series.path import vp_of_jumps
from cadlag_series.randomness import RngStream, sample_positive_stable
from cadlag_series.reference import (
    ContinuousKernelWarning,
    FrechetLaw,
    frechet_cdf,
    frechet_median,
    positive_stable_cdf,
    scale_abs_jump,
    scale_pos_jump,
    scale_vp,
)
from cadlag_series.series import SeriesConfig, lepage_sample_path
from cadlag_series.stats import ks_one_sample, ks_two_sample


def step_kernel(up: float, down: float = 0.0) -> FunctionKernel:
    """Jump ``up`` at ``t = s`` and, if ``down`` is set, a jump ``-down`` at ``(1 + s) / 2``."""

    def f(t, s):
        return up * ((s > 0) & (s <= t)) - down * ((s > 0) & ((1 + s) / 2 <= t))

    def jumps(marks):
        on = np.flatnonzero((marks > 0) & (marks <= 1))
        term = [on]
        time = [marks[on]]
        size = [np.full(on.size, up)]
        if down:
            term.append(on)
            time.append((1 + marks[on]) / 2)
            size.append(np.full(on.size, -down))
        return np.concatenate(term), np.concatenate(time), np.concatenate(size)

    return FunctionKernel(f, jumps, lambda t: np.array([0.0, t, 2 * t - 1]))


def continuous_kernel() -> FunctionKernel:
    return FunctionKernel(lambda t, s: np.sin(t * s))


def test_frechet_cdf():
    law = FrechetLaw(1.5, 2.0)
    assert frechet_cdf(law, 2.0) == pytest.approx(math.exp(-1))
    assert frechet_cdf(law, 0.0) == 0.0 and frechet_cdf(law, -3.0) == 0.0
    x = np.linspace(-1, 50, 2001)
    f = frechet_cdf(law, x)
    assert np.all(np.diff(f) >= 0)
    assert frechet_cdf(law, 1e-6) < 1e-12 and frechet_cdf(law, 1e12) > 1 - 1e-12
    with pytest.raises(ValueError):
        FrechetLaw(0.0, 1.0)


def test_frechet_median_matches_root_find():
    law = FrechetLaw(1.5, 1.0)
    root = brentq(lambda x: frechet_cdf(law, x) - 0.5, 0.1, 10, xtol=1e-14)
    assert frechet_median(law) == pytest.approx(root, rel=1e-10)
    assert root == pytest.approx(1.277, abs=5e-4)


def test_frechet_max_stability():
    law = FrechetLaw(1.5, 0.7)
    draws = law.sample(RngStream(1, ()), 5 * 10**4).reshape(10**4, 5).max(axis=1)
    target = FrechetLaw(1.5, 0.7 * 5 ** (1 / 1.5)).sample(RngStream(2, ()), 10**4)
    assert ks_two_sample(draws, target) < 0.02


def test_scale_abs_jump():
    assert scale_abs_jump(indicator_kernel(), lebesgue(), 1.5) == pytest.approx(c_alpha(1.5), rel=1e-12)
    assert scale_abs_jump(ou_kernel(1.0), lebesgue(), 1.5) == pytest.approx(c_alpha(1.5), rel=1e-12)
    k = step_kernel(2.0)
    assert scale_abs_jump(k, atoms([0.5], [3.0]), 1.0) == pytest.approx(2 / math.pi * 6, rel=1e-14)
    with pytest.warns(ContinuousKernelWarning):
        assert scale_abs_jump(continuous_kernel(), lebesgue(), 1.5) == 0.0


def test_scale_abs_jump_homogeneous():
    for a in (0.7, 1.0, 1.5):
        one = scale_abs_jump(step_kernel(1.3), lebesgue(), a)
        two = scale_abs_jump(step_kernel(2.6), lebesgue(), a)
        assert two == pytest.approx(2 * one, rel=1e-12)


def test_scale_pos_jump_forms():
    s = scale_pos_jump(indicator_kernel(), lebesgue(), 1.5)
    assert s.proof_form == pytest.approx(c_alpha(1.5) * 2 ** (-1 / 1.5), rel=1e-12)
    assert s.proof_form == pytest.approx(0.3414, abs=1e-4)
    assert s.displayed_form == pytest.approx(c_alpha(1.5) / 2, rel=1e-12)
    assert s.displayed_form == pytest.approx(0.2710, abs=1e-4)
    one = scale_pos_jump(indicator_kernel(), lebesgue(), 1.0)
    assert one.proof_form == pytest.approx(one.displayed_form, rel=1e-14)
    sym = scale_pos_jump(step_kernel(1.0, 1.0), lebesgue(), 1.5)
    assert sym.proof_form == pytest.approx(sym.displayed_form, rel=1e-12)
    assert sym.proof_form == pytest.approx(c_alpha(1.5), rel=1e-12)


def test_scale_vp():
    assert scale_vp(indicator_kernel(), lebesgue(), 1.5, 2.0) == pytest.approx(
        c_alpha(1.5) ** 2 / c_alpha(0.75), rel=1e-12)
    with pytest.raises(ValueError, match="not a.s. finite"):
        scale_vp(indicator_kernel(), lebesgue(), 1.5, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(ContinuousKernelWarning):
            scale_vp(continuous_kernel(), lebesgue(), 1.5, 1.0)
    with pytest.warns(ContinuousKernelWarning):
        assert scale_vp(continuous_kernel(), lebesgue(), 1.5, 2.0) == 0.0


def test_scale_vp_atom_against_ledger_law():
    alpha, p = 1.0, 2.0
    k, m = step_kernel(2.0), atoms([0.5], [3.0])
    scale = scale_vp(k, m, alpha, p)
    assert scale == pytest.approx(c_alpha(1.0) ** 2 / c_alpha(0.5) * 36.0, rel=1e-12)
    n = 3000
    v2 = [vp_of_jumps(lepage_sample_path(k, m, SeriesConfig(alpha, terms=2000, grid=8), RngStream(5, (i,))).ledger, p)
          for i in range(n)]
    ref = sample_positive_stable(RngStream(6, ()), alpha / p, scale, n)
    assert ks_two_sample(np.array(v2), ref) < 0.04


def test_positive_stable_cdf_reference():
    ref_cdf = lambda x: positive_stable_cdf(0.75, 2.0, x)  # noqa: E731
    x = sample_positive_stable(RngStream(9, ()), 0.75, 2.0, 5000)
    assert ks_one_sample(x, ref_cdf) < 0.03
