from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from cadlag_series.measure import (
    DensityMeasure,
    atoms,
    lebesgue,
    load_atoms_csv,
    load_density_csv,
)
from cadlag_series.randomness import RngStream


def test_lebesgue_sampling_mean():
    v = lebesgue().sample_marks(RngStream(1, (0,)), 10**5)
    assert np.all((v >= 0) & (v <= 1))
    assert abs(v.mean() - 0.5) < 0.005


def test_single_atom_always_returned():
    m = atoms([0.3], [2.0])
    assert m.sample_mark(RngStream(1, ())) == 0.3
    assert np.all(m.sample_marks(RngStream(2, ()), 100) == 0.3)


def test_two_atoms_frequencies():
    m = atoms([0.2, 0.7], [1.0, 3.0])
    v = m.sample_marks(RngStream(3, ()), 10**4)
    assert abs(np.mean(v == 0.7) - 0.75) < 0.013


def test_density_sampler_chi_square():
    # triangular-ish density on [0, 2]
    m = DensityMeasure(np.array([0.0, 0.5, 2.0]), np.array([0.2, 2.0, 0.4]))
    n = 10**5
    v = m.sample_marks(RngStream(4, ()), n)
    edges = np.linspace(0, 2, 41)
    observed = np.histogram(v, edges)[0]
    # cell masses by exact trapezoid on the piecewise-linear density
    cell = []
    for a, b in zip(edges[:-1], edges[1:]):
        xs = np.union1d([a, b], m.nodes[(m.nodes > a) & (m.nodes < b)])
        d = m.density_at(xs)
        cell.append(np.sum(0.5 * (d[1:] + d[:-1]) * np.diff(xs)))
    expected = n * np.array(cell) / m.total_mass
    stat, pval = sps.chisquare(observed, expected)
    assert pval > 0.01


def test_integrate_constants_and_polynomials():
    m = lebesgue()
    assert m.integrate(lambda s: np.full_like(s, 3.0)).value == pytest.approx(3.0, rel=1e-12)
    assert m.integrate(lambda s: s).value == pytest.approx(0.5, abs=1e-8)
    for t in (0.1, 0.37, 0.9):
        r = m.integrate(lambda s: ((s > 0) & (s <= t)).astype(float), breakpoints=[t])
        assert r.value == pytest.approx(t, abs=1e-12)
    a = atoms([0.1, 0.5], [1.0, 2.5])
    r = a.integrate(lambda s: s**2)
    assert r.value == pytest.approx(0.01 + 2.5 * 0.25, rel=1e-15)
    assert r.error == 0.0


def test_integrate_total_mass():
    m = DensityMeasure(np.array([0.0, 0.3, 1.0]), np.array([1.0, 3.0, 0.5]))
    assert m.integrate(lambda s: np.ones_like(s)).value == pytest.approx(m.total_mass, rel=1e-10)


def test_integrate_rejects_non_finite():
    with pytest.raises(ValueError):
        lebesgue().integrate(lambda s: np.full_like(s, np.inf))


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), k=st.integers(1, 6))
def test_integrate_is_linear(a, b, k):
    m = DensityMeasure(np.array([0.0, 0.4, 1.0]), np.array([1.0, 2.0, 0.5]))
    g = lambda s: np.sin(k * s)  # noqa: E731
    h = lambda s: s**k  # noqa: E731
    lhs = m.integrate(lambda s: a * g(s) + b * h(s)).value
    rhs = a * m.integrate(g).value + b * m.integrate(h).value
    assert abs(lhs - rhs) <= 1e-9 * (abs(a) + abs(b)) * 2.0


def test_refinement_within_error_estimate():
    m = DensityMeasure(np.array([0.0, 0.25, 1.0]), np.array([0.5, 2.0, 1.0]))
    g = lambda s: np.exp(np.sin(5 * s))  # noqa: E731
    coarse = m.integrate(g, nodes=512)
    fine = m.integrate(g, nodes=1024)
    assert abs(fine.value - coarse.value) <= coarse.error


def test_csv_loaders(tmp_path):
    dens = tmp_path / "d.csv"
    dens.write_text("node,density\n# comment\n0,1\n1,1\n2,3\n")
    m = load_density_csv(dens)
    assert m.total_mass == pytest.approx(1 + 2)
    at = tmp_path / "a.csv"
    at.write_text("location,mass\n0.5,2\n0.25,1\n")
    a = load_atoms_csv(at)
    assert a.total_mass == 3.0


def test_invalid_measures():
    with pytest.raises(ValueError):
        DensityMeasure(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        DensityMeasure(np.array([0.0, 1.0]), np.array([-1.0, 1.0]))
    with pytest.raises(ValueError):
        atoms([0.1], [-1.0])
