import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from polyreach.errors import InfeasibleError, InvalidInputError, SingularSystemError, UnboundedError
from polyreach.geometry import ParamSet
from polyreach.numkernel import (DenseLinearSystem, LinearProgram, lp_max_affine_over_vertices,
                                 lp_solve, max_affine_many, solve_dense)
from polyreach.poly import ParamAffineCoeff


def test_solve_dense_example():
    assert np.allclose(solve_dense(DenseLinearSystem([[2, 1], [1, 3]], [3, 5])), [0.8, 1.4])


def test_solve_dense_requires_pivoting():
    x = solve_dense(np.array([[0.0, 1.0], [1.0, 0.0]]), [2.0, 3.0])
    assert np.allclose(x, [3.0, 2.0])


def test_solve_dense_singular():
    with pytest.raises(SingularSystemError):
        solve_dense(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 2.0])


def test_solve_dense_invalid():
    with pytest.raises(InvalidInputError):
        solve_dense(np.ones((2, 3)), [1, 2])
    with pytest.raises(InvalidInputError):
        solve_dense(np.eye(2), [1, 2, 3])
    with pytest.raises(InvalidInputError):
        solve_dense(np.array([[np.nan, 0], [0, 1]]), [1, 2])


def test_solve_dense_random_vs_numpy(rng):
    for _ in range(50):
        n = int(rng.integers(1, 8))
        M = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        assert np.allclose(solve_dense(M, b), np.linalg.solve(M, b), atol=1e-10)


def test_lp_simple():
    lp = LinearProgram([1.0, 1.0], [[1, 0], [0, 1], [-1, 0], [0, -1], [1, 1]], [1, 1, 0, 0, 1.5])
    res = lp_solve(lp)
    assert res.value == pytest.approx(1.5)
    lp = LinearProgram([1.0, 1.0], [[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 0, 0], "minimize")
    assert lp_solve(lp).value == pytest.approx(0.0, abs=1e-12)


def test_lp_negative_rhs_needs_phase_one():
    # x in [2, 3]
    lp = LinearProgram([1.0], [[-1.0], [1.0]], [-2.0, 3.0], "minimize")
    assert lp_solve(lp).value == pytest.approx(2.0)


def test_lp_infeasible_and_unbounded():
    with pytest.raises(InfeasibleError):
        lp_solve(LinearProgram([1.0], [[1.0], [-1.0]], [0.0, -1.0]))
    with pytest.raises(UnboundedError):
        lp_solve(LinearProgram([1.0, 0.0], [[-1.0, 0.0]], [0.0]))
    with pytest.raises(UnboundedError):
        lp_solve(LinearProgram([1.0], np.zeros((0, 1)), np.zeros(0)))


def test_lp_degenerate_does_not_cycle():
    # many redundant constraints through the optimum vertex
    rows = [[1, 0], [0, 1], [1, 1], [2, 1], [1, 2], [-1, 0], [0, -1]]
    rhs = [1, 1, 2, 3, 3, 0, 0]
    assert lp_solve(LinearProgram([1.0, 1.0], rows, rhs)).value == pytest.approx(2.0)


def test_lp_random_vs_scipy(rng):
    for _ in range(40):
        n, m = int(rng.integers(1, 5)), int(rng.integers(3, 12))
        A = np.vstack([rng.normal(size=(m, n)), np.eye(n), -np.eye(n)])
        b = np.concatenate([rng.random(m) + 0.1, 5 * np.ones(2 * n)])
        c = rng.normal(size=n)
        ours = lp_solve(LinearProgram(c, A, b)).value
        ref = -linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs").fun
        assert ours == pytest.approx(ref, abs=1e-8)


def test_max_affine_over_box_and_vertices():
    fn = ParamAffineCoeff(1.0, (2.0, -1.0))
    P = ParamSet.from_intervals([(0, 1), (0, 2)])
    assert lp_max_affine_over_vertices(fn, P) == pytest.approx(3.0)
    assert lp_max_affine_over_vertices(ParamAffineCoeff(4.0, ()), ParamSet.empty_dim()) == 4.0
    out = max_affine_many(np.array([0.0, 1.0]), np.array([[1.0, 1.0], [-1.0, 0.0]]), P)
    assert np.allclose(out, [3.0, 1.0])


def test_max_affine_general_polytope():
    # triangle with vertices (0,0), (1,0), (0,1)
    from polyreach.geometry import TemplatePolyhedron
    tri = TemplatePolyhedron([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    P = ParamSet(tri)
    assert lp_max_affine_over_vertices(ParamAffineCoeff(0.0, (1.0, 2.0)), P) == pytest.approx(2.0)
