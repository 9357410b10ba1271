import numpy as np
import pytest

from polyreach.errors import InvalidInputError
from polyreach.geometry import Box, contains
from polyreach.models import (LOC1_STIM, LOC2, LOC3, BeesConfig, CardiacConfig, bees_field,
                              build_bees, build_cardiac, cardiac_reaches_unsafe, cardiac_unsafe,
                              signed_gap, site_support, verdict_from_gaps)
from polyreach.poly import is_multiaffine
from polyreach.reach import ReachStrategy, forward_reach, simulate_hybrid, simulate_many


def test_bees_field_conserves_population(rng):
    for variant in ("conservative", "printed"):
        cfg = BeesConfig(z2_variant=variant)
        f = bees_field(cfg)
        assert is_multiaffine(f, include_params=True)
        x = rng.random(5) * 200
        total = sum(f(x, [cfg.beta2[0]]))
        if variant == "conservative":
            assert total == pytest.approx(0.0, abs=1e-9)


def test_bees_invalid_config():
    with pytest.raises(InvalidInputError):
        BeesConfig(z2_variant="other")
    with pytest.raises(InvalidInputError):
        BeesConfig(h=-1.0)


def test_bees_events_and_initial():
    cfg = BeesConfig()
    sys, events = build_bees(cfg)
    assert sys.dim == 5 and sys.param_dim == 1
    assert np.allclose(events[cfg.discovery_step], [-1, 0, 1, 0, 0])
    assert cfg.initial.contains_box(Box.point([cfg.N - 1, 1, 0, 0, 0]))


def test_bees_degenerate_param_removed():
    sys, _ = build_bees(BeesConfig(beta2N=(1.2, 1.2)))
    assert sys.param_dim == 0


def test_bees_short_run_sound(rng):
    cfg = BeesConfig(steps=120, discovery_step=60)
    sys, events = build_bees(cfg)
    tr = forward_reach(sys, cfg.initial, ReachStrategy(), cfg.steps, events)
    X0 = rng.uniform(cfg.initial.lower, cfg.initial.upper, (30, 5))
    X0 *= cfg.N / X0.sum(axis=1, keepdims=True)  # stay on the simplex
    ps = rng.uniform(*cfg.beta2, (30, 1))
    sims = simulate_many(sys, X0, ps, cfg.steps, events)
    for k in range(0, cfg.steps + 1, 10):
        for x in sims[k]:
            assert contains(tr.set_at(k), x, 1e-6)


def test_gap_and_verdict():
    assert signed_gap((0.6, 0.8), (0.1, 0.2)) == pytest.approx(0.4)
    assert signed_gap((0.1, 0.2), (0.6, 0.8)) == pytest.approx(-0.4)
    assert signed_gap((0.1, 0.5), (0.4, 0.8)) == 0.0
    box = Box.from_intervals([(0, 0), (100, 200), (300, 400), (0, 100), (0, 100)])
    s1, s2 = site_support(box, 1000)
    assert s1 == pytest.approx((0.1, 0.3)) and s2 == pytest.approx((0.3, 0.5))
    assert verdict_from_gaps(np.linspace(0, 0.5, 600)).kind == "consensus-site-1"
    assert verdict_from_gaps(-np.linspace(0, 0.5, 600)).kind == "consensus-site-2"
    assert verdict_from_gaps(np.full(600, 0.5)).kind == "no-consensus"
    assert verdict_from_gaps(np.linspace(0, 0.2, 600)).kind == "no-consensus"
    with pytest.raises(InvalidInputError):
        verdict_from_gaps(np.zeros(3), threshold=1.5)


def test_cardiac_structure():
    cfg = CardiacConfig()
    ha = build_cardiac(cfg)
    assert ha.dim == 5 and len(ha.locations) == 5
    assert ha.initial[0][0] == LOC1_STIM
    rev = ha.reversed()
    assert {(t.source, t.target) for t in rev.transitions} == \
        {(t.target, t.source) for t in ha.transitions}
    assert [loc for loc, _ in cardiac_unsafe(cfg)][1] == LOC2


def test_cardiac_simulation_oracle():
    cfg = CardiacConfig()
    ha = build_cardiac(cfg)
    # strong stimulus response, weak decay: fires
    assert cardiac_reaches_unsafe(ha, cfg, 1.0, 1.0)
    # fast decay: never reaches the second threshold
    assert not cardiac_reaches_unsafe(ha, cfg, 180.0, 10.0)
    path = simulate_hybrid(ha, [0, 0, 1.0, 1.0, 0], cfg.steps)
    # clock only advances while stimulated and invariants hold along the run
    for loc, x in path:
        if loc != LOC3:
            assert contains(ha.location(loc).constraint, x, 1e-9)


def test_cardiac_invalid():
    with pytest.raises(InvalidInputError):
        CardiacConfig(h=0.0)


def test_printed_variant_drops_simplex_invariant():
    sys, _ = build_bees(BeesConfig(z2_variant="printed"))
    assert sys.invariant is None
    assert build_bees(BeesConfig())[0].invariant is not None
