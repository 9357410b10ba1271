import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyreach.bernstein import (bernstein_coefficients, centroid, control_matrix,
                                 fit_affine_bounds, range_enclosure)
from polyreach.errors import InvalidInputError, ResourceLimitError
from polyreach.geometry import Box, ParamSet
from polyreach.poly import ParamPoly, eval_many
from polyreach.selftest import GOLDEN_B, golden_poly, run_selftest

from conftest import random_poly


def _bernstein_eval(form, x, p):
    """Independent oracle: sum_i b_i(p) * prod_k C(d_k, i_k) x_k^i_k (1-x_k)^(d_k-i_k)."""
    from math import comb
    total = 0.0
    for idx in form.indices():
        basis = 1.0
        for xk, ik, dk in zip(x, idx, form.degree):
            basis *= comb(dk, ik) * xk**ik * (1 - xk) ** (dk - ik)
        coeff = form.coeffs[idx]
        total += basis * coeff(p)
    return total


def test_golden_coefficients():
    form = bernstein_coefficients(golden_poly())
    assert np.allclose(form.flat(), GOLDEN_B, atol=1e-12)


def test_control_matrix():
    A = control_matrix((2, 1)).rows
    assert A.shape == (6, 3)
    assert np.allclose(A[:, 0], [0, 0, 0.5, 0.5, 1, 1])
    assert np.allclose(A[:, 1], [0, 1, 0, 1, 0, 1])
    assert np.all(A[:, 2] == 1)


def test_constant_poly():
    form = bernstein_coefficients(ParamPoly.constant(2, 0, 3.5))
    assert form.size == 1
    bound = fit_affine_bounds(form, ParamSet.empty_dim())
    assert bound.upper([[0.3, 0.9]])[0] == pytest.approx(3.5)
    assert bound.lower([[0.3, 0.9]])[0] == pytest.approx(3.5)


def test_degree_cap():
    x = ParamPoly.variable(1, 0, 0)
    with pytest.raises(ResourceLimitError):
        bernstein_coefficients(x**5, max_axis_degree=4)
    with pytest.raises(InvalidInputError):
        bernstein_coefficients(x, degree=(1, 1))


def test_representation_identity(rng):
    for _ in range(20):
        poly = random_poly(rng, 2, 1, 3)
        form = bernstein_coefficients(poly)
        for _ in range(5):
            xv, pv = rng.random(2), rng.normal(size=1)
            assert _bernstein_eval(form, xv, pv) == pytest.approx(poly(xv, pv), abs=1e-10)


def test_degree_elevation_keeps_identity(rng):
    poly = random_poly(rng, 1, 0, 2)
    form = bernstein_coefficients(poly, degree=(4,))
    for xv in rng.random(10):
        assert _bernstein_eval(form, [xv], []) == pytest.approx(poly([xv]), abs=1e-10)


def test_endpoint_coefficients_interpolate():
    poly = golden_poly()
    form = bernstein_coefficients(poly)
    for pv in (0.5, 1.5):
        vals = form.values([pv])
        assert vals[0] == pytest.approx(poly([0.0], [pv]))
        assert vals[-1] == pytest.approx(poly([1.0], [pv]))


def test_centroid():
    assert np.allclose(centroid(ParamSet.from_intervals([(0, 2), (1, 3)])), [1, 2])
    assert centroid(ParamSet.empty_dim()).shape == (0,)


def test_dimension_mismatch():
    form = bernstein_coefficients(golden_poly())
    with pytest.raises(InvalidInputError):
        fit_affine_bounds(form, ParamSet.empty_dim())


def test_range_enclosure_contains_samples(rng):
    for _ in range(20):
        poly = random_poly(rng, 2, 1, 3)
        P = ParamSet.from_intervals([(-1, 1)])
        lo, hi = range_enclosure(bernstein_coefficients(poly), P)
        xs, ps = rng.random((300, 2)), rng.uniform(-1, 1, (300, 1))
        v = eval_many(poly, xs, ps)
        assert v.min() >= lo - 1e-9 and v.max() <= hi + 1e-9


def test_selftest_all_pass():
    results = run_selftest(0)
    assert all(ok for _, ok, _ in results), [r for r in results if not r[1]]


@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.integers(0, 2))
def test_affine_sandwich_property(seed, n, m):
    rng = np.random.default_rng(seed)
    poly = random_poly(rng, n, m, 3)
    P = ParamSet.from_box(Box(-np.ones(m), np.ones(m))) if m else ParamSet.empty_dim()
    bound = fit_affine_bounds(bernstein_coefficients(poly), P)
    xs, ps = rng.random((200, n)), rng.uniform(-1, 1, (200, m))
    v = eval_many(poly, xs, ps)
    scale = 1e-9 * max(1.0, np.abs(v).max())
    assert np.all(bound.lower(xs) <= v + scale)
    assert np.all(v <= bound.upper(xs) + scale)
    assert bound.delta_lower >= -1e-12 and bound.delta_upper >= -1e-12
