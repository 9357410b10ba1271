"""Acceptance criteria 1-9. Each test records a one-line verdict printed in the terminal summary."""

import itertools
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from polyreach.bernstein import bernstein_coefficients, fit_affine_bounds
from polyreach.cli import bundled_models, make_strategy
from polyreach.errors import SingularSystemError
from polyreach.geometry import (Box, ParamSet, bounding_box, box_template, box_vertices,
                                contains, unit_to_box_map)
from polyreach.models import (BeesConfig, CardiacConfig, build_bees, cardiac_reaches_unsafe,
                              consensus_metric)
from polyreach.numkernel import LinearProgram, lp_solve, solve_dense
from polyreach.poly import ParamPoly, PolyVector, compose_box, eval_many, linear_combination
from polyreach.reach import (DiscreteSystem, ReachStrategy, forward_reach, hybrid_reach,
                             image_bernstein, image_multiaffine, simulate_hybrid, simulate_many,
                             trace_contains, unsafe_param_region)
from polyreach.selftest import GOLDEN_B, golden_poly
from polyreach.serialization import load_model

from conftest import ACCEPTANCE, random_poly


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def _random_box(rng, n, lo=-1.0, hi=1.0, wmax=1.0):
    a = rng.uniform(lo, hi, n)
    return Box(a, a + rng.uniform(0.05, wmax, n))


def _params(rng, m):
    return ParamSet.from_box(_random_box(rng, m)) if m else ParamSet.empty_dim()


# 1 -------------------------------------------------------------------------------
def test_criterion_1_golden_example():
    t0 = time.perf_counter()
    form = bernstein_coefficients(golden_poly())
    bound = fit_affine_bounds(form, ParamSet.from_intervals([(0.5, 1.5)]))
    elapsed = time.perf_counter() - t0
    err_b = float(np.abs(form.flat() - GOLDEN_B).max())
    err_z = float(np.abs(bound.zeta - [0.9143, 0.7762]).max())
    err_d = abs(bound.delta_lower - 1.1905)
    err_l = float(np.abs(bound.lower_coeffs - [0.9143, -0.4143]).max())
    ok = err_b <= 1e-12 and err_z <= 1e-3 and err_d <= 1e-3 and err_l <= 1e-3 and elapsed < 1.0
    record(1, ok, f"coeff err {err_b:.1e}, zeta err {err_z:.1e}, delta err {err_d:.1e}, "
                  f"l(x) err {err_l:.1e}, {elapsed * 1e3:.1f} ms")


# 2 -------------------------------------------------------------------------------
def test_criterion_2_bound_soundness():
    rng = np.random.default_rng(2)
    violations = 0
    for _ in range(200):
        n, m = int(rng.integers(1, 4)), int(rng.integers(0, 3))
        poly = random_poly(rng, n, m, 4)
        P = _params(rng, m)
        bound = fit_affine_bounds(bernstein_coefficients(poly), P)
        xs = rng.random((10_000, n))
        ps = rng.uniform(P.box.lower, P.box.upper, (10_000, m))
        v = eval_many(poly, xs, ps)
        violations += int(np.sum(bound.lower(xs) - 1e-9 > v) + np.sum(v > bound.upper(xs) + 1e-9))
    record(2, violations == 0, f"{violations} violations over 200 polynomials x 1e4 samples")


# 3 -------------------------------------------------------------------------------
def _random_multiaffine(rng, n, m):
    comps = []
    for _ in range(n):
        terms = {}
        for _ in range(int(rng.integers(1, 6))):
            terms[tuple(int(v) for v in rng.integers(0, 2, n))] = rng.normal(size=m + 1)
        comps.append(ParamPoly(n, m, terms))
    return DiscreteSystem(PolyVector(tuple(comps)), _params(rng, m))


def _hull_distance(V, y):
    """min t s.t. |V^T lam - y| <= t, lam >= 0, sum lam = 1 (scipy oracle)."""
    K, n = V.shape
    c = np.zeros(K + 1)
    c[-1] = 1.0
    A_ub = np.block([[V.T, -np.ones((n, 1))], [-V.T, -np.ones((n, 1))]])
    b_ub = np.concatenate([y, -y])
    A_eq = np.append(np.ones(K), 0.0)[None]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (K + 1), method="highs")
    return res.fun


def test_criterion_3_multiaffine_hull():
    rng = np.random.default_rng(3)
    violations = worst = 0
    for _ in range(100):
        n, m = int(rng.integers(1, 5)), int(rng.integers(0, 3))
        sys = _random_multiaffine(rng, n, m)
        X = _random_box(rng, n)
        corners = box_vertices(Box(np.concatenate([X.lower, sys.params.box.lower]),
                                   np.concatenate([X.upper, sys.params.box.upper])))
        V = sys.compiled(corners[:, :n], corners[:, n:])
        img = image_multiaffine(X, sys)
        xs = rng.uniform(X.lower, X.upper, (20, n))
        ps = rng.uniform(sys.params.box.lower, sys.params.box.upper, (20, m))
        for y in sys.compiled(xs, ps):
            d = _hull_distance(V, y)
            worst = max(worst, d)
            violations += int(d > 1e-7 or not contains(img, y, 1e-7))
    record(3, violations == 0, f"{violations} violations, worst hull distance {worst:.1e}")


# 4 -------------------------------------------------------------------------------
def test_criterion_4_trace_soundness():
    rng = np.random.default_rng(4)
    cfg = BeesConfig(steps=150)
    sys, events = build_bees(cfg)
    y1 = rng.uniform(cfg.initial.lower[1], cfg.initial.upper[1], 100)
    x0 = np.zeros((100, 5))
    x0[:, 0], x0[:, 1] = cfg.N - y1, y1
    ps = rng.uniform(*cfg.beta2, (100, 1))
    sims = simulate_many(sys, x0, ps, cfg.steps, events)
    misses = {}
    for strat in (ReachStrategy(), ReachStrategy(kind="bernstein")):
        tr = forward_reach(sys, cfg.initial, strat, cfg.steps, events)
        misses[strat.kind] = sum(not trace_contains(tr, k, "main", x, 1e-7)
                                 for k in range(cfg.steps + 1) for x in sims[k])
        misses[strat.kind] += cfg.steps + 1 - tr.n_steps

    ccfg = CardiacConfig()
    model = load_model(bundled_models()["cardiac"])
    ha = model.hybrid
    tr = hybrid_reach(ha, make_strategy(model), ccfg.steps)
    misses["cardiac"] = 0
    for g1, g2 in zip(rng.uniform(*ccfg.g1_range, 100), rng.uniform(*ccfg.g2_range, 100)):
        path = simulate_hybrid(ha, [0.0, ccfg.v0[0], g1, g2, 0.0], ccfg.steps)
        misses["cardiac"] += sum(not trace_contains(tr, k, loc, x, 1e-7)
                                 for k, (loc, x) in enumerate(path))
    record(4, not any(misses.values()), "misses " + ", ".join(f"{k}={v}" for k, v in misses.items()))


# 5 -------------------------------------------------------------------------------
def test_criterion_5_precision_ordering():
    model = load_model(bundled_models()["bees_precision"])
    steps = 150
    tb = forward_reach(model.system, model.initial, make_strategy(model, "bernstein", "box"),
                       steps, model.events)
    tm = forward_reach(model.system, model.initial, make_strategy(model, "multiaffine"),
                       steps, model.events)
    bad, worst = 0, 0.0
    for k in range(min(tb.n_steps, tm.n_steps)):
        bb = bounding_box(tb.set_at(k))
        mb = tm.set_at(k)
        excess = max(float(np.max(mb.lower - bb.lower)), float(np.max(bb.upper - mb.upper)), 0.0)
        worst = max(worst, excess)
        bad += int(not mb.inflate(1e-6).contains_box(bb))
    bad += abs(tb.n_steps - tm.n_steps)
    record(5, bad == 0, f"Bernstein box outside inflated multi-affine box at {bad}/{steps + 1} "
                        f"steps, worst excess {worst:.3g}")


# 6 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_criterion_6_bees_verdicts():
    expected = {"bees_no_consensus": "no-consensus", "bees_site2": "consensus-site-2",
                "bees_site1": "consensus-site-1"}
    parts, ok = [], True
    for name, want in expected.items():
        model = load_model(bundled_models()[name])
        t0 = time.perf_counter()
        tr = forward_reach(model.system, model.initial, make_strategy(model), model.steps,
                           model.events)
        elapsed = time.perf_counter() - t0
        cons = model.extra["consensus"]
        v = consensus_metric(tr, cons["threshold"], cons["window"], cons["N"])
        good = v.kind == want and elapsed <= 60.0 and tr.n_steps == model.steps + 1
        ok &= good
        parts.append(f"{name}: {v.kind} (gap {v.final_gap:+.3f}, {elapsed:.1f}s)")
    record(6, ok, "; ".join(parts))


# 7 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_criterion_7_cardiac_region():
    cfg = CardiacConfig()
    model = load_model(bundled_models()["cardiac"])
    reg = model.region
    region = unsafe_param_region(model.hybrid, model.unsafe, make_strategy(model), model.steps,
                                 tuple(reg["param_axes"]), [tuple(f) for f in reg["fix"]],
                                 reg.get("locations"), tuple(reg.get("grid", (1, 1))))
    unsafe = misses = 0
    for g1 in np.linspace(*cfg.g1_range, 40):
        for g2 in np.linspace(*cfg.g2_range, 40):
            if cardiac_reaches_unsafe(model.hybrid, cfg, g1, g2):
                unsafe += 1
                misses += int(not any(contains(b, [g1, g2], 1e-9) for b in region))
    record(7, misses == 0, f"{len(region)} region boxes, {unsafe} unsafe grid points, "
                           f"{misses} misses")


# 8 -------------------------------------------------------------------------------
def test_criterion_8_template_coefficients():
    rng = np.random.default_rng(8)
    unsound, within, total, worst = 0, 0, 0, 0.0
    H = box_template(2)
    g = np.linspace(0.0, 1.0, 200)
    for _ in range(50):
        m = int(rng.integers(0, 2))
        sys = DiscreteSystem(PolyVector(tuple(random_poly(rng, 2, m, 2) for _ in range(2))),
                             _params(rng, m))
        X = _random_box(rng, 2)
        c = image_bernstein(X, sys, H).c
        tau = unit_to_box_map(X)
        xs = np.array([tau(u) for u in itertools.product(g, g)])
        pv = box_vertices(sys.params.box)
        vals = np.max([sys.compiled(xs, np.tile(p, (xs.shape[0], 1))) for p in pv], axis=0)
        composed = PolyVector(tuple(compose_box(comp, tau) for comp in sys.dynamics))
        for i, row in enumerate(H):
            gridmax = float(np.max(vals @ row))
            slack = c[i] - gridmax
            delta = fit_affine_bounds(bernstein_coefficients(linear_combination(composed, row)),
                                      sys.params).delta_upper
            total += 1
            unsound += int(slack < -1e-9)
            within += int(slack <= delta + 1e-9)
            worst = max(worst, slack)
    record(8, unsound == 0, f"{unsound}/{total} coefficients below grid max; slack within "
                            f"delta_upper for {within}/{total} (reported), max slack {worst:.3g}")


# 9 -------------------------------------------------------------------------------
def _brute_force_lp(c, A, b):
    n = A.shape[1]
    best = -np.inf
    for rows in itertools.combinations(range(A.shape[0]), n):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            best = max(best, float(c @ x))
    return best


def test_criterion_9_numerical_kernel():
    rng = np.random.default_rng(9)
    eps = np.finfo(float).eps
    bad_solve = 0
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        A = rng.normal(size=(n, n))
        b = rng.normal(size=n)
        try:
            x = solve_dense(A, b)
        except SingularSystemError:
            continue
        r = np.abs(A @ x - b).max()
        bound = 64 * n * eps * (np.abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max())
        bad_solve += int(r > bound)
    bad_lp = 0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, 9))
        A = np.vstack([rng.normal(size=(k, n)), np.eye(n), -np.eye(n)])
        b = np.concatenate([rng.uniform(0.1, 2.0, k), rng.uniform(0.5, 3.0, 2 * n)])
        c = rng.normal(size=n)
        ours = lp_solve(LinearProgram(c, A, b)).value
        bad_lp += int(abs(ours - _brute_force_lp(c, A, b)) > 1e-8 * max(1.0, abs(ours)))
    record(9, bad_solve == 0 and bad_lp == 0,
           f"solve_dense residual failures {bad_solve}/1000, LP mismatches {bad_lp}/200")
