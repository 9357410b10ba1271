"""Set integration: one-step image operators and reachability loops.

Two image operators are provided:

* :func:`image_multiaffine` maps the vertices of ``X x P`` and boxes the
  result. For multi-affine dynamics the image of a box lies in the convex hull
  of the vertex images, so the interval hull of those images is sound.
* :func:`image_bernstein` bounds every template direction ``H_i . pi`` by an
  affine over-estimator obtained from the Bernstein expansion on the bounding
  box of ``X`` and maximizes it over ``X`` with an LP.

:func:`forward_reach`, :func:`backward_reach` and :func:`hybrid_reach` iterate
these operators and record a :class:`ReachTrace`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator, Mapping, Sequence

import numpy as np

from .bernstein import bernstein_coefficients, fit_affine_bounds
from .errors import (DivergenceError, EmptySetError, InfeasibleError,
                     InvalidInputError, ResourceLimitError,
                     StrategyViolationError)
from .geometry import (Box, ParamSet, SetLike, TemplatePolyhedron,
                       as_polyhedron, bounding_box, box_template, box_vertices,
                       clip_box, clip_boxes, contains, interval_hull,
                       octagon_template, preimage_under_map, template_hull,
                       unit_to_box_map)
from .numkernel import LinearProgram, lp_solve
from .poly import (CompiledVector, ParamPoly, PolyVector, compose_box,
                   euler_discretize, is_multiaffine, linear_combination)

log = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e12
DEFAULT_VERTEX_CAP = 1 << 16


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    """``x(k+1) = dynamics(x(k), p)`` with ``p`` ranging over ``params``.

    ``field`` and ``h`` record the vector field the dynamics were obtained
    from by Euler discretization; they are needed for backward analysis.
    ``invariant`` is a state constraint every trajectory is known to satisfy;
    reachable sets are intersected with it after each step.
    """

    dynamics: PolyVector
    params: ParamSet
    field: PolyVector | None = None
    h: float | None = None
    invariant: TemplatePolyhedron | None = None

    def __post_init__(self):
        if len(self.dynamics) != self.dynamics.n_vars:
            raise InvalidInputError("dynamics must have one component per state variable")
        if self.params.dim != self.dynamics.n_params:
            raise InvalidInputError(
                f"parameter set has dimension {self.params.dim}, dynamics expect {self.dynamics.n_params}")
        if (self.field is None) != (self.h is None):
            raise InvalidInputError("field and h must be given together")
        if self.invariant is not None and self.invariant.dim != self.dim:
            raise InvalidInputError("invariant dimension mismatch")

    @classmethod
    def from_field(cls, field: PolyVector, h: float, params: ParamSet,
                   invariant: TemplatePolyhedron | None = None) -> "DiscreteSystem":
        return cls(euler_discretize(field, h), params, field, h, invariant)

    @property
    def dim(self) -> int:
        return self.dynamics.n_vars

    @property
    def param_dim(self) -> int:
        return self.dynamics.n_params

    @cached_property
    def multiaffine(self) -> bool:
        return is_multiaffine(self.dynamics, include_params=True)

    @cached_property
    def compiled(self) -> CompiledVector:
        return CompiledVector(self.dynamics)

    def with_params(self, params: ParamSet) -> "DiscreteSystem":
        return replace(self, params=params)

    def reversed(self) -> "DiscreteSystem":
        """Euler map of the negated field, ``x - h f(x, p)``."""
        if self.field is None:
            raise InvalidInputError("backward analysis needs dynamics built from a vector field")
        neg = PolyVector(tuple(-f for f in self.field))
        return DiscreteSystem.from_field(neg, self.h, self.params, self.invariant)

    def step(self, x, p=()) -> np.ndarray:
        return self.dynamics(x, p)


@dataclass(frozen=True)
class ReachStrategy:
    """Image operator choice.

    ``template`` is ``"box"``, ``"octagon"`` or an explicit row matrix and is
    only used by the Bernstein operator. ``param_splits`` partitions a box
    parameter set into a grid of sub-boxes that are integrated separately; the
    recorded set is the hull of the pieces.
    """

    kind: str = "multiaffine"
    template: object = "box"
    vertex_cap: int = DEFAULT_VERTEX_CAP
    param_splits: tuple[int, ...] | None = None
    divergence_bound: float = DIVERGENCE_BOUND

    def __post_init__(self):
        if self.kind not in ("multiaffine", "bernstein"):
            raise InvalidInputError(f"unknown strategy kind {self.kind!r}")
        if isinstance(self.template, str) and self.template not in ("box", "octagon"):
            raise InvalidInputError(f"unknown template {self.template!r}")

    def template_matrix(self, n: int) -> np.ndarray:
        if isinstance(self.template, str):
            return box_template(n) if self.template == "box" else octagon_template(n)
        H = np.asarray(self.template, dtype=float)
        if H.ndim != 2 or H.shape[1] != n:
            raise InvalidInputError(f"template matrix must have {n} columns")
        return H


@dataclass(frozen=True)
class TraceStep:
    step: int
    location: str
    set: SetLike


@dataclass
class ReachTrace:
    """Per-step reachable sets, one record per active location."""

    records: list[TraceStep] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceStep]:
        return iter(self.records)

    def append(self, step: int, location: str, s: SetLike):
        self.records.append(TraceStep(step, location, s))

    @property
    def n_steps(self) -> int:
        """Number of recorded step indices (``last step + 1``)."""
        return 1 + max((r.step for r in self.records), default=-1)

    def at(self, step: int, location: str | None = None) -> list[SetLike]:
        return [r.set for r in self.records
                if r.step == step and (location is None or r.location == location)]

    def set_at(self, step: int, location: str = "main") -> SetLike | None:
        found = self.at(step, location)
        return found[0] if found else None

    def locations(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.location)
        return list(seen)

    def boxes(self) -> list[Box]:
        """Bounding box of each record, in record order."""
        return [bounding_box(r.set) for r in self.records]


# -- image operators ----------------------------------------------------------


def _check_multiaffine(sys: DiscreteSystem, cap: int):
    if not sys.multiaffine:
        raise StrategyViolationError("dynamics are not multi-affine in states and parameters")
    if sys.params.box is None:
        raise StrategyViolationError("multi-affine image needs a box parameter set")
    if 2 ** (sys.dim + sys.param_dim) > cap:
        raise ResourceLimitError(
            f"2^{sys.dim + sys.param_dim} vertices exceed the vertex cap {cap}")


def _corner_bits(k: int) -> np.ndarray:
    return box_vertices(Box.unit(k), cap=64) if k else np.zeros((1, 0))


def _multiaffine_batch(lo, hi, plo, phi, sys: DiscreteSystem):
    """Vertex images of a batch of boxes ``[lo, hi] x [plo, phi]``; returns hull bounds.

    Each output component only depends on a few of the joint variables, so
    its extremes are taken over the vertices of that sub-box alone.
    """
    L = np.concatenate([lo, plo], axis=1).T
    W = np.concatenate([hi, phi], axis=1).T - L
    K = L.shape[1]
    out_lo = np.empty((K, sys.dim))
    out_hi = np.empty((K, sys.dim))
    for k, (support, factors, coef) in enumerate(sys.compiled.parts):
        s = len(support)
        bits = _corner_bits(s).T
        V = bits.shape[1]
        Z = np.empty((s + 1, K, V))
        Z[:s] = L[support, :, None] + W[support, :, None] * bits[:, None, :]
        Z[s] = 1.0
        M = Z[factors[:, 0]]
        for col in range(1, factors.shape[1]):
            M *= Z[factors[:, col]]
        vals = np.tensordot(coef, M, axes=1)
        out_lo[:, k] = vals.min(axis=1)
        out_hi[:, k] = vals.max(axis=1)
    return out_lo, out_hi


def image_multiaffine(X: Box, sys: DiscreteSystem, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Box:
    """Interval hull of the images of the vertices of ``X x P``."""
    if not isinstance(X, Box):
        X = bounding_box(X)
    if X.dim != sys.dim:
        raise InvalidInputError("set and system dimensions differ")
    _check_multiaffine(sys, vertex_cap)
    P = sys.params.box
    lo, hi = _multiaffine_batch(X.lower[None], X.upper[None], P.lower[None], P.upper[None], sys)
    return Box(lo[0], hi[0])


def _as_box_if_possible(X: SetLike) -> Box | None:
    if isinstance(X, Box):
        return X
    if X.is_box_template():
        try:
            return X.as_box()
        except InfeasibleError:
            raise
    return None


def image_bernstein(X: SetLike, sys: DiscreteSystem, H) -> TemplatePolyhedron:
    """Template polyhedron ``<H, c>`` containing ``pi(X)`` for all ``p`` in ``P``.

    For each row the polynomial ``H_i . pi`` is composed with the map from the
    unit box onto the bounding box of ``X``; its Bernstein upper bound
    function is then maximized over the preimage of ``X`` (an LP, or a corner
    pick when ``X`` is a box).
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[1] != sys.dim:
        raise InvalidInputError(f"template must have {sys.dim} columns")
    xbox = _as_box_if_possible(X)
    B = xbox if xbox is not None else bounding_box(X)
    tau = unit_to_box_map(B)
    composed = PolyVector(tuple(compose_box(comp, tau) for comp in sys.dynamics))
    Y = None
    if xbox is None:
        n = sys.dim
        Y = preimage_under_map(X, tau).intersect(Box.unit(n))
    c = np.empty(H.shape[0])
    for i, row in enumerate(H):
        gamma = linear_combination(composed, row)
        bound = fit_affine_bounds(bernstein_coefficients(gamma), sys.params)
        slope, intercept = bound.zeta[:-1], bound.zeta[-1] + bound.delta_upper
        if Y is None:
            c[i] = intercept + np.sum(np.maximum(slope, 0.0))
        elif not np.any(slope):
            c[i] = intercept
        else:
            c[i] = intercept + lp_solve(LinearProgram(slope, Y.H, Y.c, "maximize")).value
    return TemplatePolyhedron(H, c)


def image(X: SetLike, sys: DiscreteSystem, strategy: ReachStrategy) -> SetLike:
    if strategy.kind == "multiaffine":
        return image_multiaffine(X, sys, strategy.vertex_cap)
    return image_bernstein(X, sys, strategy.template_matrix(sys.dim))


# -- set plumbing shared by the loops -----------------------------------------


def _check_divergence(s: SetLike, bound: float, step: int):
    vals = np.concatenate([s.lower, s.upper]) if isinstance(s, Box) else s.c
    if np.any(~np.isfinite(vals)) or np.any(np.abs(vals) > bound):
        raise DivergenceError(f"reachable set bound exceeded {bound:g} at step {step}")


def _restrict(s: SetLike, constraint: TemplatePolyhedron | None, strategy: ReachStrategy,
              n: int) -> SetLike | None:
    """``s & constraint`` in the strategy's set representation; ``None`` if empty."""
    if constraint is None:
        return s
    if isinstance(s, Box):
        return clip_box(s, constraint)
    inter = s.intersect(constraint)
    try:
        return template_hull(inter, strategy.template_matrix(n))
    except (EmptySetError, InfeasibleError):
        return None


def _merge(a: SetLike | None, b: SetLike | None) -> SetLike | None:
    if a is None:
        return b
    if b is None:
        return a
    if isinstance(a, Box) and isinstance(b, Box):
        return a.hull(b)
    a, b = as_polyhedron(a), as_polyhedron(b)
    if a.H.shape != b.H.shape or not np.array_equal(a.H, b.H):
        raise InvalidInputError("cannot merge template polyhedra with different templates")
    return TemplatePolyhedron(a.H, np.maximum(a.c, b.c))


def _initial_set(X0: SetLike, strategy: ReachStrategy, n: int) -> SetLike:
    if X0.dim != n:
        raise InvalidInputError(f"initial set has dimension {X0.dim}, system has {n}")
    if strategy.kind == "multiaffine":
        return X0 if isinstance(X0, Box) else bounding_box(X0)
    return X0 if isinstance(X0, TemplatePolyhedron) else X0.as_polyhedron()


def _normalize_events(events, n: int) -> dict[int, np.ndarray]:
    out: dict[int, np.ndarray] = {}
    for step, shift in (events or {}).items():
        vec = np.asarray(shift, dtype=float).reshape(-1)
        if vec.shape[0] != n:
            raise InvalidInputError(f"event shift at step {step} has wrong length")
        out[int(step)] = out.get(int(step), 0.0) + vec
    return out


def _translate(s: SetLike, shift) -> SetLike:
    return s.translate(shift)


# -- loops ----------------------------------------------------------------------


def forward_reach(sys: DiscreteSystem, X0: SetLike, strategy: ReachStrategy, steps: int,
                  events: Mapping[int, Sequence[float]] | None = None,
                  location: str = "main") -> ReachTrace:
    """Iterate the image operator ``steps`` times from ``X0``.

    ``events`` maps a step index to a translation applied to the set at that
    step (before it is recorded). With ``strategy.param_splits`` the parameter
    box is partitioned and each piece integrated separately.
    """
    if steps < 0:
        raise InvalidInputError("steps must be non-negative")
    ev = _normalize_events(events, sys.dim)
    if strategy.param_splits is not None:
        pieces = sys.params.split(strategy.param_splits)
        if strategy.kind == "multiaffine":
            return _forward_multiaffine_batch(sys, X0, strategy, steps, ev, pieces, location)
        traces = [forward_reach(sys.with_params(P), X0, replace(strategy, param_splits=None),
                                steps, events, location) for P in pieces]
        return _merge_traces(traces, location)
    if strategy.kind == "multiaffine":
        _check_multiaffine(sys, strategy.vertex_cap)
        P = sys.params.box
        return _forward_multiaffine_batch(sys, X0, strategy, steps, ev, [ParamSet.from_box(P)], location)

    X = _initial_set(X0, strategy, sys.dim)
    if 0 in ev:
        X = _translate(X, ev[0])
    trace = ReachTrace(meta={"strategy": strategy.kind})
    trace.append(0, location, X)
    for k in range(1, steps + 1):
        X = image(X, sys, strategy)
        X = _restrict(X, sys.invariant, strategy, sys.dim)
        if X is None:
            log.info("reachable set became empty at step %d", k)
            break
        if k in ev:
            X = _translate(X, ev[k])
        _check_divergence(X, strategy.divergence_bound, k)
        trace.append(k, location, X)
    return trace


def _forward_multiaffine_batch(sys, X0, strategy, steps, ev, pieces, location) -> ReachTrace:
    _check_multiaffine(sys, strategy.vertex_cap)
    X0 = _initial_set(X0, strategy, sys.dim)
    K = len(pieces)
    lo = np.tile(X0.lower, (K, 1))
    hi = np.tile(X0.upper, (K, 1))
    plo = np.array([P.box.lower for P in pieces]).reshape(K, sys.param_dim)
    phi = np.array([P.box.upper for P in pieces]).reshape(K, sys.param_dim)
    if 0 in ev:
        lo, hi = lo + ev[0], hi + ev[0]
    trace = ReachTrace(meta={"strategy": strategy.kind, "pieces": K})
    trace.append(0, location, Box(lo.min(axis=0), hi.max(axis=0)))
    for k in range(1, steps + 1):
        lo, hi = _multiaffine_batch(lo, hi, plo, phi, sys)
        lo, hi, ok = clip_boxes(lo, hi, sys.invariant)
        if not np.all(ok):
            lo, hi, plo, phi = lo[ok], hi[ok], plo[ok], phi[ok]
            if lo.shape[0] == 0:
                log.info("reachable set became empty at step %d", k)
                break
        if k in ev:
            lo, hi = lo + ev[k], hi + ev[k]
        box = Box(lo.min(axis=0), hi.max(axis=0))
        _check_divergence(box, strategy.divergence_bound, k)
        trace.append(k, location, box)
    return trace


def _merge_traces(traces: list[ReachTrace], location: str) -> ReachTrace:
    merged = ReachTrace(meta=dict(traces[0].meta, pieces=len(traces)))
    for k in range(max(t.n_steps for t in traces)):
        acc = None
        for t in traces:
            for s in t.at(k, location):
                acc = _merge(acc, s)
        if acc is None:
            break
        merged.append(k, location, acc)
    return merged


def backward_reach(sys: DiscreteSystem, unsafe: SetLike, strategy: ReachStrategy,
                   steps: int) -> ReachTrace:
    """Forward iteration of the reversed Euler map ``x - h f(x, p)`` from ``unsafe``."""
    return forward_reach(sys.reversed(), unsafe, strategy, steps)


# -- hybrid automata -------------------------------------------------------------


@dataclass(frozen=True)
class Location:
    id: str
    system: DiscreteSystem
    invariant: TemplatePolyhedron | None = None

    @property
    def constraint(self) -> TemplatePolyhedron | None:
        parts = [c for c in (self.invariant, self.system.invariant) if c is not None]
        if not parts:
            return None
        out = parts[0]
        for extra in parts[1:]:
            out = out.intersect(extra)
        return out


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    guard: TemplatePolyhedron


@dataclass(frozen=True)
class HybridAutomaton:
    """Locations with discrete-time dynamics and guarded identity-reset jumps.

    ``initial`` is a sequence of ``(location id, set)`` pairs.
    """

    locations: tuple[Location, ...]
    transitions: tuple[Transition, ...]
    initial: tuple[tuple[str, SetLike], ...]

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "initial", tuple((str(a), b) for a, b in self.initial))
        ids = [loc.id for loc in self.locations]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("location ids must be unique")
        if not ids:
            raise InvalidInputError("automaton has no locations")
        dims = {loc.system.dim for loc in self.locations}
        if len(dims) != 1:
            raise InvalidInputError("all locations must share the state dimension")
        for t in self.transitions:
            if t.source not in ids or t.target not in ids:
                raise InvalidInputError(f"transition {t.source}->{t.target} references an unknown location")
            if t.guard.dim != self.dim:
                raise InvalidInputError("guard dimension mismatch")
        for loc_id, s in self.initial:
            if loc_id not in ids:
                raise InvalidInputError(f"initial location {loc_id!r} does not exist")
            if s.dim != self.dim:
                raise InvalidInputError("initial set dimension mismatch")

    @property
    def dim(self) -> int:
        return self.locations[0].system.dim

    def location(self, loc_id: str) -> Location:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise InvalidInputError(f"unknown location {loc_id!r}")

    def outgoing(self, loc_id: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == loc_id]

    def with_initial(self, initial) -> "HybridAutomaton":
        return replace(self, initial=tuple(initial))

    def reversed(self, initial=None) -> "HybridAutomaton":
        """Automaton with reversed Euler dynamics and reversed transitions."""
        locs = tuple(Location(l.id, l.system.reversed(), l.invariant) for l in self.locations)
        trans = tuple(Transition(t.target, t.source, t.guard) for t in self.transitions)
        return HybridAutomaton(locs, trans, self.initial if initial is None else initial)


def hybrid_reach(ha: HybridAutomaton, strategy: ReachStrategy, steps: int) -> ReachTrace:
    """Reachability with may-semantics for guards.

    Per step and active location: the set is advanced and intersected with the
    location invariant; its intersection with each outgoing guard seeds the
    target location at the next step. Sets meeting in one location are merged.
    The full pre-guard set stays in the source location.
    """
    if steps < 0:
        raise InvalidInputError("steps must be non-negative")
    n = ha.dim
    current: dict[str, SetLike] = {}
    for loc_id, s in ha.initial:
        s = _initial_set(s, strategy, n)
        s = _restrict(s, ha.location(loc_id).constraint, strategy, n)
        if s is not None:
            current[loc_id] = _merge(current.get(loc_id), s)
    order = [loc.id for loc in ha.locations]
    trace = ReachTrace(meta={"strategy": strategy.kind})
    for k in range(steps + 1):
        if not current:
            break
        for loc_id in order:
            if loc_id in current:
                _check_divergence(current[loc_id], strategy.divergence_bound, k)
                trace.append(k, loc_id, current[loc_id])
        if k == steps:
            break
        nxt: dict[str, SetLike] = {}
        for loc_id in order:
            if loc_id not in current:
                continue
            loc = ha.location(loc_id)
            S = current[loc_id]
            advanced = _restrict(image(S, loc.system, strategy), loc.constraint, strategy, n)
            if advanced is not None:
                nxt[loc_id] = _merge(nxt.get(loc_id), advanced)
            for t in ha.outgoing(loc_id):
                seed = _restrict(S, t.guard, strategy, n)
                if seed is None:
                    continue
                seed = _restrict(seed, ha.location(t.target).constraint, strategy, n)
                if seed is not None:
                    nxt[t.target] = _merge(nxt.get(t.target), seed)
        current = nxt
    return trace


def hybrid_backward_reach(ha: HybridAutomaton, unsafe, strategy: ReachStrategy,
                          steps: int) -> ReachTrace:
    """Hybrid reachability of the reversed automaton started from ``unsafe`` pairs."""
    return hybrid_reach(ha.reversed(initial=tuple(unsafe)), strategy, steps)


def extract_param_region(trace: ReachTrace, fix: tuple[int, float] | Sequence[tuple[int, float]],
                         param_axes: tuple[int, int],
                         locations: Sequence[str] | None = None) -> list[Box]:
    """Project onto ``param_axes`` every trace set that meets the hyperplane(s) ``x_axis = value``.

    Box records are kept iff each fixed value lies within the box's range on
    that axis; polyhedral records are cut by the hyperplanes and bounded by LP.
    """
    fixes = [fix] if isinstance(fix[0], (int, np.integer)) else list(fix)
    n = None
    out: list[Box] = []
    for rec in trace:
        if locations is not None and rec.location not in locations:
            continue
        s = rec.set
        n = s.dim
        for axis, _ in fixes:
            if not 0 <= axis < n:
                raise InvalidInputError(f"fixed axis {axis} out of range for dimension {n}")
        for axis in param_axes:
            if not 0 <= axis < n:
                raise InvalidInputError(f"parameter axis {axis} out of range for dimension {n}")
        if isinstance(s, Box):
            if all(s.lower[a] <= v <= s.upper[a] for a, v in fixes):
                ax = list(param_axes)
                out.append(Box(s.lower[ax], s.upper[ax]))
            continue
        rows, rhs = [s.H], [s.c]
        for axis, value in fixes:
            e = np.zeros(n)
            e[axis] = 1.0
            rows += [e[None], -e[None]]
            rhs += [[value], [-value]]
        cut = TemplatePolyhedron(np.vstack(rows), np.concatenate(rhs))
        try:
            bb = [_axis_range(cut, a) for a in param_axes]
        except (EmptySetError, InfeasibleError):
            continue
        out.append(Box([b[0] for b in bb], [b[1] for b in bb]))
    return out


def _axis_range(poly: TemplatePolyhedron, axis: int) -> tuple[float, float]:
    e = np.zeros(poly.dim)
    e[axis] = 1.0
    hi = lp_solve(LinearProgram(e, poly.H, poly.c, "maximize")).value
    lo = lp_solve(LinearProgram(e, poly.H, poly.c, "minimize")).value
    return lo, max(lo, hi)


# -- point simulation (oracles) ----------------------------------------------------


def simulate(sys: DiscreteSystem, x0, p, steps: int,
             events: Mapping[int, Sequence[float]] | None = None) -> np.ndarray:
    """Point trajectory of length ``steps + 1`` (events applied as in :func:`forward_reach`)."""
    ev = _normalize_events(events, sys.dim)
    xs = np.empty((steps + 1, sys.dim))
    x = np.asarray(x0, dtype=float) + ev.get(0, 0.0)
    xs[0] = x
    p = np.asarray(p, dtype=float)
    for k in range(1, steps + 1):
        x = sys.dynamics(x, p) + ev.get(k, 0.0)
        xs[k] = x
    return xs


def simulate_many(sys: DiscreteSystem, x0s, ps, steps: int,
                  events: Mapping[int, Sequence[float]] | None = None) -> np.ndarray:
    """Vectorized :func:`simulate`; returns shape ``(steps + 1, N, n)``."""
    ev = _normalize_events(events, sys.dim)
    x = np.asarray(x0s, dtype=float).reshape(-1, sys.dim) + ev.get(0, 0.0)
    ps = np.asarray(ps, dtype=float).reshape(x.shape[0], sys.param_dim)
    out = np.empty((steps + 1,) + x.shape)
    out[0] = x
    f = sys.compiled
    for k in range(1, steps + 1):
        x = f(x, ps) + ev.get(k, 0.0)
        out[k] = x
    return out


def simulate_hybrid(ha: HybridAutomaton, x0, steps: int, start: str | None = None,
                    p=None, tol: float = 0.0) -> list[tuple[str, np.ndarray]]:
    """Urgent-semantics run: jump (state unchanged) as soon as a guard holds, else flow.

    A jump consumes one step. Transitions are tried in declaration order.
    """
    loc = start if start is not None else ha.initial[0][0]
    x = np.asarray(x0, dtype=float)
    path = [(loc, x)]
    for _ in range(steps):
        for t in ha.outgoing(loc):
            if contains(t.guard, x, tol):
                loc = t.target
                break
        else:
            sysk = ha.location(loc).system
            pk = np.zeros(sysk.param_dim) if p is None else p
            x = sysk.dynamics(x, pk)
        path.append((loc, x))
    return path


def trace_contains(trace: ReachTrace, step: int, location: str, x, tol: float = 1e-7) -> bool:
    return any(contains(s, x, tol) for s in trace.at(step, location))


def unsafe_param_region(ha: HybridAutomaton, unsafe: Sequence[tuple[str, SetLike]],
                        strategy: ReachStrategy, steps: int, param_axes: tuple[int, int],
                        fix: Sequence[tuple[int, float]], locations: Sequence[str] | None = None,
                        grid: tuple[int, int] = (1, 1)) -> list[Box]:
    """Over-approximate the values on ``param_axes`` from which ``unsafe`` is reachable.

    Parameters are modelled as constant state variables. The range of the
    unsafe sets on ``param_axes`` is cut into a ``grid`` of cells; for each
    cell a backward hybrid run starts from the unsafe sets restricted to the
    cell and the surviving hyperplane cuts (see :func:`extract_param_region`)
    are hulled into at most one box per cell.
    """
    ax = list(param_axes)
    if len(ax) != 2 or len(grid) != 2 or min(grid) < 1:
        raise InvalidInputError("need two parameter axes and a positive 2-D grid")
    boxes = [(loc, bounding_box(s)) for loc, s in unsafe]
    if not boxes:
        return []
    lo = np.min([b.lower[ax] for _, b in boxes], axis=0)
    hi = np.max([b.upper[ax] for _, b in boxes], axis=0)
    edges = [np.linspace(lo[i], hi[i], grid[i] + 1) for i in range(2)]
    region: list[Box] = []
    for i in range(grid[0]):
        for j in range(grid[1]):
            cell = Box([edges[0][i], edges[1][j]], [edges[0][i + 1], edges[1][j + 1]])
            starts = []
            for loc, b in boxes:
                sub = b.intersect(_embed(b, ax, cell))
                if sub is not None:
                    starts.append((loc, sub))
            if not starts:
                continue
            trace = hybrid_backward_reach(ha, starts, strategy, steps)
            found = extract_param_region(trace, list(fix), param_axes, locations)
            acc = None
            for f in found:
                acc = f if acc is None else acc.hull(f)
            if acc is not None:
                region.append(acc)
    return region


def _embed(b: Box, axes: list[int], cell: Box) -> Box:
    lo, hi = b.lower.copy(), b.upper.copy()
    lo[axes], hi[axes] = cell.lower, cell.upper
    return Box(lo, hi)
