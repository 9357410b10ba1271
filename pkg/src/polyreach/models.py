"""Case-study systems: honeybee nest-site choice and a cardiac-cell hybrid automaton.

Bees state order is ``(X, Y1, Y2, Z1, Z2)``: neutral bees, bees dancing for
site 1 / site 2, and idle bees converted to site 1 / site 2. The only
parameter is ``beta2``. Cardiac state order is ``(u, v, g1, g2, t)``; the
conductances are carried as constant state variables and ``t`` is a clock
that switches the stimulus off.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .geometry import Box, ParamSet, TemplatePolyhedron, bounding_box
from .poly import ParamPoly, PolyVector
from .reach import (DiscreteSystem, HybridAutomaton, Location, ReachTrace,
                    Transition, simulate_hybrid)

BEES_VARS = ("X", "Y1", "Y2", "Z1", "Z2")
CARDIAC_VARS = ("u", "v", "g1", "g2", "t")

# -- honeybees ------------------------------------------------------------------


@dataclass(frozen=True)
class BeesConfig:
    """Rates are given in population-scaled form: ``beta1N = beta1 * N``.

    ``z2_variant="printed"`` selects the Z2 update with swapped beta indices
    (``delta*beta1*Y2*Z2 + alpha*beta2*Y1*Z2``), which does not conserve the
    population; the default ``"conservative"`` mirrors the Z1 update.
    ``initial_halfwidth`` is applied to X and Y1 around ``(N - 1, 1, 0, 0, 0)``
    unless ``initial_box`` is given.
    """

    alpha: float = 0.7
    beta1N: float = 1.0
    beta2N: tuple[float, float] = (1.0, 1.2)
    gamma: float = 0.3
    delta_bee: float = 1.0
    h: float = 0.01
    N: float = 1000.0
    steps: int = 6000
    discovery_step: int = 300
    discovery_seed: float = 1.0
    initial_halfwidth: float = 1.0
    initial_box: Box | None = None
    z2_variant: str = "conservative"
    simplex_invariant: bool = True
    invariant_slack: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "beta2N", tuple(float(v) for v in self.beta2N))
        rates = (self.alpha, self.beta1N, *self.beta2N, self.gamma, self.delta_bee)
        if any(r < 0 for r in rates):
            raise InvalidInputError("bee rates must be non-negative")
        if self.beta2N[0] > self.beta2N[1]:
            raise InvalidInputError("beta2N interval is reversed")
        if self.h <= 0 or self.N <= 0:
            raise InvalidInputError("h and N must be positive")
        if self.z2_variant not in ("conservative", "printed"):
            raise InvalidInputError(f"unknown z2_variant {self.z2_variant!r}")
        if self.discovery_seed < 0 or self.initial_halfwidth < 0:
            raise InvalidInputError("seed and half-width must be non-negative")
        box = self.initial
        if np.any(box.lower < 0) or np.any(box.upper > self.N):
            raise InvalidInputError("initial box must lie within [0, N]^5")

    @property
    def beta1(self) -> float:
        return self.beta1N / self.N

    @property
    def beta2(self) -> tuple[float, float]:
        return (self.beta2N[0] / self.N, self.beta2N[1] / self.N)

    @property
    def initial(self) -> Box:
        if self.initial_box is not None:
            return self.initial_box
        w, N = self.initial_halfwidth, self.N
        c = np.array([N - 1.0, 1.0, 0.0, 0.0, 0.0])
        lo = np.maximum(c - [w, w, 0, 0, 0], 0.0)
        hi = np.minimum(c + [w, w, 0, 0, 0], N)
        return Box(lo, hi)

    @property
    def events(self) -> dict[int, np.ndarray]:
        s = self.discovery_seed
        return {self.discovery_step: np.array([-s, 0.0, s, 0.0, 0.0])} if s else {}


def bees_field(cfg: BeesConfig) -> PolyVector:
    """Right-hand side of the bee ODEs; ``beta2`` is the single parameter."""
    X, Y1, Y2, Z1, Z2 = (ParamPoly.variable(5, 1, k) for k in range(5))
    b2 = ParamPoly.parameter(5, 1, 0)
    b1, a, g, d = cfg.beta1, cfg.alpha, cfg.gamma, cfg.delta_bee
    fX = -b1 * X * Y1 - b2 * (X * Y2)
    fY1 = b1 * X * Y1 - g * Y1 + d * b1 * Y1 * Z1 + a * b1 * Y1 * Z2
    fY2 = b2 * (X * Y2) - g * Y2 + d * b2 * (Y2 * Z2) + a * b2 * (Y2 * Z1)
    fZ1 = g * Y1 - d * b1 * Y1 * Z1 - a * b2 * (Y2 * Z1)
    if cfg.z2_variant == "conservative":
        fZ2 = g * Y2 - d * b2 * (Y2 * Z2) - a * b1 * Y1 * Z2
    else:
        fZ2 = g * Y2 - d * b1 * Y2 * Z2 - a * b2 * (Y1 * Z2)
    return PolyVector((fX, fY1, fY2, fZ1, fZ2))


def bees_invariant(cfg: BeesConfig) -> TemplatePolyhedron:
    """``x >= 0`` and ``|sum(x) - N| <= slack``: Euler steps of the conservative model keep both."""
    n = 5
    H = np.vstack([-np.eye(n), np.ones((1, n)), -np.ones((1, n))])
    c = np.concatenate([np.zeros(n), [cfg.N + cfg.invariant_slack, -cfg.N + cfg.invariant_slack]])
    return TemplatePolyhedron(H, c)


def build_bees(cfg: BeesConfig = BeesConfig()) -> tuple[DiscreteSystem, dict[int, np.ndarray]]:
    """Euler-discretized bee system and its discovery event schedule.

    A degenerate ``beta2N`` interval yields a parameter-free system. The
    simplex invariant is attached only for the conservative variant.
    """
    fld = bees_field(cfg)
    P = ParamSet.from_intervals([cfg.beta2])
    if cfg.beta2N[0] == cfg.beta2N[1]:
        fld = _fix_params(fld, [cfg.beta2[0]])
        P = ParamSet.empty_dim()
    inv = bees_invariant(cfg) if cfg.simplex_invariant and cfg.z2_variant == "conservative" else None
    return DiscreteSystem.from_field(fld, cfg.h, P, inv), cfg.events


def _fix_params(vec: PolyVector, p: Sequence[float]) -> PolyVector:
    """Substitute a parameter point, leaving a parameter-free vector."""
    p = np.asarray(p, dtype=float)
    out = []
    for comp in vec:
        coef = comp.coefficients[:, :1] + comp.coefficients[:, 1:] @ p[:, None]
        out.append(ParamPoly(comp.n_vars, 0, zip(map(tuple, comp.exponents), coef)))
    return PolyVector(tuple(out))


# -- consensus ------------------------------------------------------------------


@dataclass(frozen=True)
class ConsensusVerdict:
    kind: str
    final_gap: float
    gap_trend: float


def site_support(box: Box, N: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Intervals of ``(Y1 + Z1) / N`` and ``(Y2 + Z2) / N``."""
    lo, hi = box.lower, box.upper
    s1 = ((lo[1] + lo[3]) / N, (hi[1] + hi[3]) / N)
    s2 = ((lo[2] + lo[4]) / N, (hi[2] + hi[4]) / N)
    return s1, s2


def signed_gap(s1, s2) -> float:
    """Distance between two intervals; positive when ``s1`` lies above ``s2``."""
    if s1[0] > s2[1]:
        return s1[0] - s2[1]
    if s2[0] > s1[1]:
        return -(s2[0] - s1[1])
    return 0.0


def gap_series(trace: ReachTrace, N: float, location: str | None = None) -> np.ndarray:
    gaps = []
    for rec in trace:
        if location is not None and rec.location != location:
            continue
        if rec.set.dim != 5:
            raise InvalidInputError("consensus metric needs 5-dimensional bee sets")
        box = rec.set if isinstance(rec.set, Box) else bounding_box(rec.set)
        gaps.append(signed_gap(*site_support(box, N)))
    return np.array(gaps)


def verdict_from_gaps(gaps: np.ndarray, threshold: float = 0.3, window: int = 500) -> ConsensusVerdict:
    if not 0 < threshold < 1:
        raise InvalidInputError("threshold must lie in (0, 1)")
    if window < 2:
        raise InvalidInputError("window must be at least 2")
    gaps = np.asarray(gaps, dtype=float)
    if gaps.size == 0:
        raise InvalidInputError("empty gap series")
    final = float(gaps[-1])
    tail = np.abs(gaps[-window:])
    trend = float(np.mean(np.diff(tail))) if tail.size > 1 else 0.0
    if abs(final) >= threshold and trend > 0:
        kind = "consensus-site-1" if final > 0 else "consensus-site-2"
    else:
        kind = "no-consensus"
    return ConsensusVerdict(kind, final, trend)


def consensus_metric(trace: ReachTrace, threshold: float = 0.3, window: int = 500,
                     N: float = 1000.0) -> ConsensusVerdict:
    """Consensus iff the final site-support gap is at least ``threshold`` and still widening."""
    return verdict_from_gaps(gap_series(trace, N), threshold, window)


# -- cardiac cell -----------------------------------------------------------------


@dataclass(frozen=True)
class CardiacConfig:
    """Two-mode cell model with a time-limited stimulus.

    Each mode is split into a stimulated copy (``e = e_amp``, clock running)
    and an unstimulated copy (``e = 0``, clock frozen). The switch fires once
    the clock reaches ``stim_cutoff`` (half a step early, so the sampled clock
    value at the cutoff triggers it).
    """

    e_amp: float = 0.66
    stim_cutoff: float = 0.25
    g1_range: tuple[float, float] = (1.0, 180.0)
    g2_range: tuple[float, float] = (1.0, 10.0)
    guard12: float = 0.06
    guard23: float = 0.13
    h: float = 0.001
    v0: tuple[float, float] = (0.0, 0.0)
    steps: int = 400

    def __post_init__(self):
        object.__setattr__(self, "g1_range", tuple(float(v) for v in self.g1_range))
        object.__setattr__(self, "g2_range", tuple(float(v) for v in self.g2_range))
        object.__setattr__(self, "v0", tuple(float(v) for v in self.v0))
        if not 0 < self.guard12 < self.guard23:
            raise InvalidInputError("guards must satisfy 0 < guard12 < guard23")
        if self.h <= 0 or self.stim_cutoff <= 0 or self.e_amp < 0:
            raise InvalidInputError("h, stim_cutoff must be positive and e_amp non-negative")
        for lo, hi in (self.g1_range, self.g2_range, self.v0):
            if lo > hi:
                raise InvalidInputError("reversed interval")
        if self.g1_range[0] < 0 or self.g2_range[0] < 0:
            raise InvalidInputError("conductances must be non-negative")
        if self.h * max(self.g1_range[1], self.g2_range[1]) >= 1:
            raise InvalidInputError("h * g must stay below 1 for a stable Euler scheme")

    @property
    def t_max(self) -> float:
        return self.stim_cutoff + self.h / 2


LOC1_STIM, LOC1, LOC2_STIM, LOC2, LOC3 = "loc1_stim", "loc1", "loc2_stim", "loc2", "loc3"
CARDIAC_LOCATIONS = (LOC1_STIM, LOC1, LOC2_STIM, LOC2, LOC3)


def _cardiac_field(mode: int, e: float, clock: bool) -> PolyVector:
    u, v, g1, g2, _ = (ParamPoly.variable(5, 0, k) for k in range(5))
    zero = ParamPoly.zero(5, 0)
    one = ParamPoly.constant(5, 0, 1.0)
    g = g1 if mode == 1 else g2
    du = e - g * u
    dv = g1 - v * g1 if mode == 1 else -(v * g2)
    return PolyVector((du, dv, zero, zero, one if clock else zero))


def _halfspace(axis: int, sign: float, bound: float, n: int = 5) -> tuple[np.ndarray, float]:
    row = np.zeros(n)
    row[axis] = sign
    return row, sign * bound


def _poly(rows: Sequence[tuple[np.ndarray, float]]) -> TemplatePolyhedron:
    return TemplatePolyhedron(np.array([r for r, _ in rows]), np.array([c for _, c in rows]))


def cardiac_box(cfg: CardiacConfig, u=(0.0, 0.0), v=None, g1=None, g2=None, t=(0.0, 0.0)) -> Box:
    v = cfg.v0 if v is None else v
    g1 = cfg.g1_range if g1 is None else g1
    g2 = cfg.g2_range if g2 is None else g2
    return Box.from_intervals([u, v, g1, g2, t])


def build_cardiac(cfg: CardiacConfig = CardiacConfig()) -> HybridAutomaton:
    """Hybrid automaton over ``(u, v, g1, g2, t)`` starting in ``loc1_stim`` at ``u = t = 0``.

    Location invariants hold along every run with urgent jumps: ``u`` stays in
    ``[0, 1]``, and since a mode only flows while its outgoing ``u``-guard is
    false, ``u`` can overshoot that guard by at most one step ``h * e_amp``.
    """
    h, e = cfg.h, cfg.e_amp
    P = ParamSet.empty_dim()
    common = [_halfspace(0, -1, 0.0), _halfspace(0, 1, 1.0), _halfspace(1, -1, 0.0),
              _halfspace(1, 1, 1.0), _halfspace(4, -1, 0.0)]
    cap1 = _halfspace(0, 1, cfg.guard12 + h * e)
    cap2 = _halfspace(0, 1, cfg.guard23 + h * e)
    clock_cap = _halfspace(4, 1, cfg.t_max)
    g_box = [_halfspace(2, -1, cfg.g1_range[0]), _halfspace(2, 1, cfg.g1_range[1]),
             _halfspace(3, -1, cfg.g2_range[0]), _halfspace(3, 1, cfg.g2_range[1])]

    def loc(name, mode, stim, extra):
        sys = DiscreteSystem.from_field(_cardiac_field(mode, e if stim else 0.0, stim), h, P)
        return Location(name, sys, _poly(common + g_box + extra))

    locations = (
        loc(LOC1_STIM, 1, True, [cap1, clock_cap]),
        loc(LOC1, 1, False, [cap1]),
        loc(LOC2_STIM, 2, True, [cap2, clock_cap]),
        loc(LOC2, 2, False, [cap2]),
        Location(LOC3, DiscreteSystem.from_field(PolyVector((ParamPoly.zero(5, 0),) * 5), h, P),
                 _poly(common + g_box)),
    )
    clock_guard = _poly([_halfspace(4, -1, cfg.stim_cutoff - h / 2)])
    g12 = _poly([_halfspace(0, -1, cfg.guard12)])
    g23 = _poly([_halfspace(0, -1, cfg.guard23)])
    transitions = (
        Transition(LOC1_STIM, LOC1, clock_guard),
        Transition(LOC1_STIM, LOC2_STIM, g12),
        Transition(LOC1, LOC2, g12),
        Transition(LOC2_STIM, LOC2, clock_guard),
        Transition(LOC2_STIM, LOC3, g23),
        Transition(LOC2, LOC3, g23),
    )
    return HybridAutomaton(locations, transitions, ((LOC1_STIM, cardiac_box(cfg)),))


def cardiac_unsafe(cfg: CardiacConfig, g1=None, g2=None) -> list[tuple[str, Box]]:
    """States of the two ``loc2`` copies satisfying the ``loc3`` guard."""
    u = (cfg.guard23, cfg.guard23 + cfg.h * cfg.e_amp)
    stim = cardiac_box(cfg, u=u, v=(0.0, 1.0), g1=g1, g2=g2, t=(0.0, cfg.t_max))
    nostim = cardiac_box(cfg, u=u, v=(0.0, 1.0), g1=g1, g2=g2, t=(0.0, cfg.t_max))
    return [(LOC2_STIM, stim), (LOC2, nostim)]


def cardiac_reaches_unsafe(ha: HybridAutomaton, cfg: CardiacConfig, g1: float, g2: float,
                           steps: int | None = None) -> bool:
    """Forward simulation from ``u = t = 0``: does the run enter ``loc3``?"""
    x0 = [0.0, cfg.v0[0], g1, g2, 0.0]
    path = simulate_hybrid(ha, x0, cfg.steps if steps is None else steps)
    return any(loc == LOC3 for loc, _ in path)
