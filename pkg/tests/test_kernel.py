from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cadlag_series.kernel import (
    FunctionKernel,
    TabulatedKernel,
    c_alpha,
    indicator_kernel,
    lepage_integrand,
    load_tabulated_kernel,
    ou_kernel,
    verify_monotone_norm,
)
from cadlag_series.measure import lebesgue
from cadlag_series.randomness import RngStream

BUILTINS = [indicator_kernel(), ou_kernel(1.0), ou_kernel(3.5)]


def test_indicator_values_and_jumps():
    k = indicator_kernel()
    assert k.eval(0.5, 0.25) == 1.0
    assert k.eval(0.5, 0.75) == 0.0
    assert list(k.section_jump_times(0.3)) == [0.3]
    assert k.jump_size(0.3, 0.3) == 1.0
    assert k.jump_size(0.4, 0.3) == 0.0
    assert k.section_jump_times(0.0).size == 0


def test_indicator_alpha_norm():
    m = lebesgue()
    for t in (0.2, 0.5, 1.0):
        v = m.integrate(lambda s: np.abs(indicator_kernel().eval(t, s)) ** 1.5,
                        indicator_kernel().s_breakpoints(t)).value
        assert v ** (1 / 1.5) == pytest.approx(t ** (1 / 1.5), rel=1e-12)


def test_ou_values():
    k = ou_kernel(2.0)
    for s in (0.1, 0.5, 1.0):
        assert k.eval(s, s) == 1.0
    assert k.eval(1.0, 0.5) == pytest.approx(np.exp(-0.5 * 2.0), rel=1e-15)
    absmax, up, down = k.jump_extremes(np.array([0.2, 0.9]))
    assert np.all(absmax == 1.0) and np.all(up == 1.0) and np.all(down == 0.0)
    with pytest.raises(ValueError):
        ou_kernel(0.0)


@pytest.mark.parametrize("k", BUILTINS, ids=["indicator", "ou1", "ou3.5"])
def test_right_continuity_and_jump_consistency(k):
    rng = np.random.default_rng(0)
    t = rng.uniform(0, 1, 1000)
    s = rng.uniform(0, 1, 1000)
    eps = 2.0 ** -40
    assert np.max(np.abs(k.eval(t, s) - k.eval(np.minimum(t + eps, 1.0), s))) < 1e-11
    for sj in s[:50]:
        for tau in k.section_jump_times(sj):
            left = k.eval(tau - 2.0**-40, sj)
            assert k.eval(tau, sj) - left == pytest.approx(k.jump_size(tau, sj), abs=1e-10)


def test_accumulate_matches_dense():
    rng = np.random.default_rng(1)
    marks = rng.uniform(0, 1, 300)
    w = rng.normal(size=300)
    grid = np.linspace(0, 1, 257)
    for k in BUILTINS:
        dense = k.eval(grid[:, None], marks[None, :]) @ w
        assert np.allclose(k.accumulate(grid, w, marks), dense, atol=1e-11)


def test_lepage_integrand():
    m = lebesgue()
    h = lepage_integrand(indicator_kernel(), m, 1.5)
    assert h.symmetric and h.monotone_norm
    assert h(0.7, 1.0, 0.3) == pytest.approx(c_alpha(1.5))
    assert float(h.b(0.5)) == 0.0
    assert verify_monotone_norm(h, m, RngStream(1, ()))
    assert verify_monotone_norm(lepage_integrand(ou_kernel(1.0), m, 0.8), m, RngStream(2, ()))


def test_levy_tail_integral_oracle():
    # int_0^inf P(|H(1, r, V)| > 1) dr = c**alpha m(S) E|f(1, V)|**alpha, by r-quadrature
    alpha = 1.5
    h = lepage_integrand(indicator_kernel(), lebesgue(), alpha)
    v = np.random.default_rng(3).uniform(0, 1, 2000)
    r = np.linspace(0, 2, 20001)
    prob = np.array([np.mean(np.abs(h(1.0, x, v)) > 1) for x in r[1:]])
    est = np.sum(prob) * (r[1] - r[0])
    assert est == pytest.approx(c_alpha(alpha) ** alpha, rel=1e-3)


def test_function_kernel_without_jumps_is_continuous():
    k = FunctionKernel(lambda t, s: np.sin(t + s))
    assert k.jumps(np.array([0.1, 0.2])).term.size == 0
    assert np.all(k.section_vp(np.array([0.5]), 2.0) == 0)


def _table():
    t = np.linspace(0, 1, 5)
    s = np.array([0.0, 0.5])
    v = np.zeros((5, 2))
    d = np.zeros((5, 2))
    v[2:, 0] = 1.0  # unit step at t=0.5 for column s=0
    d[2, 0] = 1.0
    v[:, 1] = t  # ramp for column s=0.5
    return TabulatedKernel(t, s, v, d)


def test_tabulated_kernel():
    k = _table()
    assert k.eval(0.5, 0.2) == 1.0
    assert k.eval(0.5 - 1e-9, 0.2) == pytest.approx(0.0, abs=1e-6)
    assert k.eval(0.3, 0.7) == pytest.approx(0.3)
    j = k.jumps(np.array([0.2, 0.7, 0.1]))
    assert list(j.term) == [0, 2] and list(j.time) == [0.5, 0.5] and list(j.size) == [1.0, 1.0]


def test_tabulated_loader(tmp_path):
    vals = tmp_path / "k.csv"
    rows = ["t,s,value"]
    for t in np.linspace(0, 1, 5):
        for s in (0.0, 0.5):
            rows.append(f"{t},{s},{1.0 if (s == 0.0 and t >= 0.5) else (t if s == 0.5 else 0.0)}")
    vals.write_text("\n".join(rows) + "\n")
    jumps = tmp_path / "j.csv"
    jumps.write_text("s,jump_time,jump_size\n0.0,0.5,1.0\n")
    k = load_tabulated_kernel(vals, jumps)
    ref = _table()
    probe = np.linspace(0, 1, 37)
    for s in (0.1, 0.6):
        assert np.allclose(k.eval(probe, s), ref.eval(probe, s))


@settings(max_examples=50, deadline=None)
@given(s=st.floats(0.001, 1.0), lam=st.floats(0.01, 50))
def test_ou_sup_jump_is_one(s, lam):
    k = ou_kernel(lam)
    assert k.jump_extremes(np.array([s]))[0][0] == 1.0
    assert k.section_vp(np.array([s]), 2.0)[0] == 1.0
