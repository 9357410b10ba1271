"""Built-in checks: the degree-5 worked example end to end plus small property suites."""

from __future__ import annotations

import numpy as np

from .bernstein import (bernstein_coefficients, control_matrix,
                        fit_affine_bounds, range_enclosure)
from .geometry import Box, ParamSet
from .numkernel import DenseLinearSystem, solve_dense
from .poly import ParamPoly, compose_box, evaluate, AffineMap

GOLDEN_B = np.array([[0.0, 1.0], [0.0, 0.8], [0.3, 0.6], [0.8, 0.4], [1.4, 0.6], [-0.5, 2.0]])


def golden_poly() -> ParamPoly:
    """``p (1 - x + 2 x^4) + 3 x^2 - x^3 - 2.5 x^5`` over one state and one parameter."""
    return ParamPoly(1, 1, {(0,): (0.0, 1.0), (1,): (0.0, -1.0), (4,): (0.0, 2.0),
                            (2,): 3.0, (3,): -1.0, (5,): -2.5})


def _random_poly(rng, n, m, max_deg):
    terms = {}
    for _ in range(rng.integers(1, 8)):
        ex = tuple(int(v) for v in rng.integers(0, max_deg + 1, size=n))
        terms[ex] = rng.normal(size=m + 1)
    return ParamPoly(n, m, terms)


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    out: list[tuple[str, bool, str]] = []

    def check(name, ok, detail=""):
        out.append((name, bool(ok), detail))

    pi = golden_poly()
    P = ParamSet.from_intervals([(0.5, 1.5)])
    form = bernstein_coefficients(pi)
    err = float(np.abs(form.flat() - GOLDEN_B).max())
    check("bernstein coefficients", err <= 1e-12, f"max error {err:.2e}")
    b1 = form.values([1.0])
    err = float(np.abs(b1 - [1, 0.8, 0.9, 1.2, 2, 1.5]).max())
    check("coefficients at p=1", err <= 1e-12, f"max error {err:.2e}")
    A = control_matrix(form.degree).rows
    check("control matrix", np.allclose(A[:, 0], np.linspace(0, 1, 6)) and np.all(A[:, 1] == 1))
    bound = fit_affine_bounds(form, P)
    check("least-squares axis", np.allclose(bound.zeta, [0.9143, 0.7762], atol=1e-3),
          f"zeta={np.round(bound.zeta, 4).tolist()}")
    check("downward shift", abs(bound.delta_lower - 1.1905) <= 1e-3, f"delta={bound.delta_lower:.4f}")
    check("lower bound function", np.allclose(bound.lower_coeffs, [0.9143, -0.4143], atol=1e-3),
          f"l(x)={bound.lower_coeffs[0]:.4f}x{bound.lower_coeffs[1]:+.4f}")
    lo, hi = range_enclosure(form, ParamSet.from_intervals([(1.0, 1.0)]))
    check("range enclosure at p=1", abs(lo - 0.8) <= 1e-12 and abs(hi - 2.0) <= 1e-12, f"[{lo}, {hi}]")
    z = solve_dense(DenseLinearSystem([[2.2, 3.0], [3.0, 6.0]], [4.34, 7.40]))
    check("normal equations", np.allclose(z, [0.9143, 0.7762], atol=1e-3), f"{np.round(z, 4).tolist()}")

    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(20):
        n, m = int(rng.integers(1, 3)), int(rng.integers(0, 3))
        poly = _random_poly(rng, n, m, 3)
        Pm = ParamSet.from_box(Box(-np.ones(m), np.ones(m))) if m else ParamSet.empty_dim()
        bnd = fit_affine_bounds(bernstein_coefficients(poly), Pm)
        xs = rng.random((500, n))
        ps = rng.uniform(-1, 1, size=(500, m))
        vals = np.array([evaluate(poly, x, p) for x, p in zip(xs, ps)])
        violations += int(np.sum(bnd.lower(xs) - 1e-9 > vals) + np.sum(vals > bnd.upper(xs) + 1e-9))
    check("bound sandwich (20 random polynomials)", violations == 0, f"{violations} violations")

    worst = 0.0
    for _ in range(20):
        poly = _random_poly(rng, 2, 1, 3)
        amap = AffineMap(rng.random(2) * 3, rng.normal(size=2))
        gamma = compose_box(poly, amap)
        for _ in range(20):
            y, p = rng.random(2), rng.normal(size=1)
            worst = max(worst, abs(evaluate(gamma, y, p) - evaluate(poly, amap(y), p)))
    check("box composition", worst <= 1e-9, f"max error {worst:.2e}")
    return out
