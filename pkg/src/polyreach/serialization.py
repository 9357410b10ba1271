"""Model files (JSON) and trace files (JSON lines).

Floats are written with ``repr`` semantics by the standard ``json`` module,
which is the shortest decimal string that round-trips to the same double.

Model file layout::

    {
      "name": "...",
      "variables": ["x", "y"],
      "parameters": [{"name": "p", "interval": [lo, hi]}],
      "param_constraints": {"H": [[...]], "c": [...]},      # optional, replaces intervals
      "h": 0.01,                                             # present => "dynamics" is a vector field
      "dynamics": [[{"exponents": [1, 0], "coeff_const": 1.0, "coeff_params": [0.0]}, ...], ...],
      "invariant": {"type": "template", "H": ..., "c": ...},  # optional
      "initial": {"type": "box", "lower": [...], "upper": [...]},
      "template": "box" | "octagon" | {"H": [[...]]},
      "events": [{"step": 300, "shift": [...]}],
      "steps": 150,
      "strategy": {"param_splits": [500]},
      "hybrid": {
        "locations": [{"id": "a", "h": 0.01, "dynamics": [...], "invariant": {...}}],
        "transitions": [{"source": "a", "target": "b", "guard": {...}}],
        "initial": [{"location": "a", "set": {...}}],
        "unsafe": [{"location": "b", "set": {...}}],
        "region": {"param_axes": [2, 3], "fix": [[0, 0.0]], "locations": ["a"], "grid": [8, 8]}
      },
      "extra": {...}                                         # free-form, echoed into traces
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ModelFormatError, ReachError
from .geometry import Box, ParamSet, SetLike, TemplatePolyhedron
from .poly import ParamPoly, PolyVector
from .reach import (DiscreteSystem, HybridAutomaton, Location, ReachTrace,
                    Transition)


@dataclass
class Model:
    name: str
    variables: list[str]
    parameters: list[str]
    params: ParamSet
    system: DiscreteSystem | None = None
    initial: SetLike | None = None
    template: Any = "box"
    events: dict[int, np.ndarray] = field(default_factory=dict)
    steps: int = 0
    strategy: dict = field(default_factory=dict)
    hybrid: HybridAutomaton | None = None
    unsafe: list[tuple[str, SetLike]] = field(default_factory=list)
    region: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.variables)


# -- low-level encoders ----------------------------------------------------------


def _require(d: dict, key: str, ctx: str):
    if not isinstance(d, dict) or key not in d:
        raise ModelFormatError("missing required key", f"{ctx}.{key}" if ctx else key)
    return d[key]


def _floats(value, key: str, length: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"expected numbers ({exc})", key) from None
    if arr.ndim != 1:
        raise ModelFormatError("expected a flat list of numbers", key)
    if length is not None and arr.shape[0] != length:
        raise ModelFormatError(f"expected {length} entries, got {arr.shape[0]}", key)
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError("non-finite number", key)
    return arr


def _matrix(value, key: str, cols: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"expected a matrix ({exc})", key) from None
    if arr.size == 0:
        return np.zeros((0, cols))
    if arr.ndim != 2 or arr.shape[1] != cols:
        raise ModelFormatError(f"expected rows of length {cols}", key)
    return arr


def encode_set(s: SetLike) -> dict:
    if isinstance(s, Box):
        return {"type": "box", "lower": s.lower.tolist(), "upper": s.upper.tolist()}
    return {"type": "template", "H": s.H.tolist(), "c": s.c.tolist()}


def decode_set(d: dict, n: int, key: str) -> SetLike:
    kind = _require(d, "type", key)
    try:
        if kind == "box":
            lo = _floats(_require(d, "lower", key), f"{key}.lower", n)
            hi = _floats(_require(d, "upper", key), f"{key}.upper", n)
            return Box(lo, hi)
        if kind == "template":
            H = _matrix(_require(d, "H", key), f"{key}.H", n)
            c = _floats(_require(d, "c", key), f"{key}.c", H.shape[0])
            return TemplatePolyhedron(H, c)
    except ModelFormatError:
        raise
    except ReachError as exc:
        raise ModelFormatError(str(exc), key) from None
    raise ModelFormatError(f"unknown set type {kind!r}", f"{key}.type")


def encode_poly(poly: ParamPoly) -> list[dict]:
    return [{"exponents": [int(e) for e in ex], "coeff_const": float(c[0]),
             "coeff_params": [float(v) for v in c[1:]]}
            for ex, c in zip(poly.exponents, poly.coefficients)]


def decode_poly(terms, n: int, m: int, key: str) -> ParamPoly:
    if not isinstance(terms, list):
        raise ModelFormatError("expected a list of terms", key)
    items = []
    for t, term in enumerate(terms):
        tk = f"{key}[{t}]"
        exps = _require(term, "exponents", tk)
        if not isinstance(exps, list) or len(exps) != n or not all(isinstance(e, int) and e >= 0 for e in exps):
            raise ModelFormatError(f"expected {n} non-negative integer exponents", f"{tk}.exponents")
        const = float(term.get("coeff_const", 0.0))
        grad = _floats(term.get("coeff_params", [0.0] * m), f"{tk}.coeff_params", m)
        items.append((tuple(exps), np.concatenate([[const], grad])))
    return ParamPoly(n, m, items)


def encode_vector(vec: PolyVector) -> list[list[dict]]:
    return [encode_poly(c) for c in vec]


def decode_vector(comps, n: int, m: int, key: str) -> PolyVector:
    if not isinstance(comps, list) or len(comps) != n:
        raise ModelFormatError(f"expected {n} components", key)
    return PolyVector(tuple(decode_poly(c, n, m, f"{key}[{k}]") for k, c in enumerate(comps)))


def encode_template(t) -> Any:
    if isinstance(t, str):
        return t
    return {"H": np.asarray(t, dtype=float).tolist()}


def decode_template(t, n: int) -> Any:
    if isinstance(t, str):
        if t not in ("box", "octagon"):
            raise ModelFormatError(f"unknown template {t!r}", "template")
        return t
    return _matrix(_require(t, "H", "template"), "template.H", n)


def _decode_system(d: dict, n: int, m: int, P: ParamSet, key: str) -> DiscreteSystem:
    vec = decode_vector(_require(d, "dynamics", key), n, m, f"{key}.dynamics" if key else "dynamics")
    inv = decode_set(d["invariant"], n, f"{key}.invariant" if key else "invariant") if d.get("invariant") else None
    if inv is not None and isinstance(inv, Box):
        inv = inv.as_polyhedron()
    try:
        if d.get("h") is not None:
            return DiscreteSystem.from_field(vec, float(d["h"]), P, inv)
        return DiscreteSystem(vec, P, invariant=inv)
    except ReachError as exc:
        raise ModelFormatError(str(exc), key or "dynamics") from None


def _encode_system(sys: DiscreteSystem) -> dict:
    out: dict = {}
    if sys.field is not None:
        out["h"] = sys.h
        out["dynamics"] = encode_vector(sys.field)
    else:
        out["dynamics"] = encode_vector(sys.dynamics)
    if sys.invariant is not None:
        out["invariant"] = encode_set(sys.invariant)
    return out


# -- models ------------------------------------------------------------------------


def parse_model(d: dict) -> Model:
    if not isinstance(d, dict):
        raise ModelFormatError("model must be a JSON object")
    variables = _require(d, "variables", "")
    if not isinstance(variables, list) or not variables or not all(isinstance(v, str) for v in variables):
        raise ModelFormatError("expected a non-empty list of names", "variables")
    n = len(variables)
    params = d.get("parameters", [])
    names = [str(_require(p, "name", f"parameters[{j}]")) for j, p in enumerate(params)]
    m = len(names)
    try:
        if "param_constraints" in d:
            pc = d["param_constraints"]
            H = _matrix(_require(pc, "H", "param_constraints"), "param_constraints.H", m)
            c = _floats(_require(pc, "c", "param_constraints"), "param_constraints.c", H.shape[0])
            P = ParamSet(TemplatePolyhedron(H, c))
        elif m:
            iv = [_floats(_require(p, "interval", f"parameters[{j}]"), f"parameters[{j}].interval", 2)
                  for j, p in enumerate(params)]
            P = ParamSet.from_intervals(iv)
        else:
            P = ParamSet.empty_dim()
    except ModelFormatError:
        raise
    except ReachError as exc:
        raise ModelFormatError(str(exc), "parameters") from None

    model = Model(name=str(d.get("name", "model")), variables=list(variables), parameters=names, params=P)
    model.template = decode_template(d.get("template", "box"), n)
    model.steps = int(d.get("steps", 0))
    model.strategy = dict(d.get("strategy", {}))
    model.extra = dict(d.get("extra", {}))
    for e, ev in enumerate(d.get("events", [])):
        step = _require(ev, "step", f"events[{e}]")
        shift = _floats(_require(ev, "shift", f"events[{e}]"), f"events[{e}].shift", n)
        model.events[int(step)] = model.events.get(int(step), 0.0) + shift

    if "hybrid" in d:
        hy = d["hybrid"]
        locs = []
        for i, ld in enumerate(_require(hy, "locations", "hybrid")):
            key = f"hybrid.locations[{i}]"
            lid = str(_require(ld, "id", key))
            sys = _decode_system(ld, n, m, P, key)
            inv = decode_set(ld["location_invariant"], n, f"{key}.location_invariant") \
                if ld.get("location_invariant") else None
            locs.append(Location(lid, sys, None if inv is None else _poly(inv)))
        trans = [Transition(str(_require(t, "source", f"hybrid.transitions[{i}]")),
                            str(_require(t, "target", f"hybrid.transitions[{i}]")),
                            _poly(decode_set(_require(t, "guard", f"hybrid.transitions[{i}]"), n,
                                             f"hybrid.transitions[{i}].guard")))
                 for i, t in enumerate(hy.get("transitions", []))]
        init = [(str(_require(p, "location", f"hybrid.initial[{i}]")),
                 decode_set(_require(p, "set", f"hybrid.initial[{i}]"), n, f"hybrid.initial[{i}].set"))
                for i, p in enumerate(_require(hy, "initial", "hybrid"))]
        try:
            model.hybrid = HybridAutomaton(tuple(locs), tuple(trans), tuple(init))
        except ReachError as exc:
            raise ModelFormatError(str(exc), "hybrid") from None
        model.unsafe = [(str(_require(p, "location", f"hybrid.unsafe[{i}]")),
                         decode_set(_require(p, "set", f"hybrid.unsafe[{i}]"), n, f"hybrid.unsafe[{i}].set"))
                        for i, p in enumerate(hy.get("unsafe", []))]
        model.region = dict(hy.get("region", {}))
        model.initial = init[0][1] if init else None
    else:
        model.system = _decode_system(d, n, m, P, "")
        model.initial = decode_set(_require(d, "initial", ""), n, "initial")
    return model


def _poly(s: SetLike) -> TemplatePolyhedron:
    return s.as_polyhedron() if isinstance(s, Box) else s


def _encode_params(model: Model) -> dict:
    P = model.params
    out: dict = {}
    if P.box is not None:
        out["parameters"] = [{"name": nm, "interval": [float(lo), float(hi)]}
                             for nm, (lo, hi) in zip(model.parameters, P.box.intervals())]
    else:
        out["parameters"] = [{"name": nm} for nm in model.parameters]
        out["param_constraints"] = {"H": P.polyhedron.H.tolist(), "c": P.polyhedron.c.tolist()}
    return out


def serialize_model(model: Model) -> dict:
    d: dict = {"name": model.name, "variables": list(model.variables)}
    d.update(_encode_params(model))
    if model.hybrid is not None:
        ha = model.hybrid
        locs = []
        for loc in ha.locations:
            ld = {"id": loc.id, **_encode_system(loc.system)}
            if loc.invariant is not None:
                ld["location_invariant"] = encode_set(loc.invariant)
            locs.append(ld)
        d["hybrid"] = {
            "locations": locs,
            "transitions": [{"source": t.source, "target": t.target, "guard": encode_set(t.guard)}
                            for t in ha.transitions],
            "initial": [{"location": lid, "set": encode_set(s)} for lid, s in ha.initial],
            "unsafe": [{"location": lid, "set": encode_set(s)} for lid, s in model.unsafe],
            "region": model.region,
        }
    else:
        d.update(_encode_system(model.system))
        d["initial"] = encode_set(model.initial)
    d["template"] = encode_template(model.template)
    if model.events:
        d["events"] = [{"step": k, "shift": np.asarray(v, dtype=float).tolist()}
                       for k, v in sorted(model.events.items())]
    d["steps"] = model.steps
    if model.strategy:
        d["strategy"] = model.strategy
    if model.extra:
        d["extra"] = model.extra
    return d


def load_model(path) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file: {exc}", "path") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from None
    return parse_model(d)


def save_model(model: Model, path):
    Path(path).write_text(json.dumps(serialize_model(model), indent=1) + "\n")


# -- traces ------------------------------------------------------------------------


def write_trace(trace: ReachTrace, path, meta: dict | None = None):
    """JSON lines: one ``{"meta": ...}`` header, then one record per (step, location)."""
    header = {"meta": {**trace.meta, **(meta or {})}}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in trace:
            fh.write(json.dumps({"step": rec.step, "location": rec.location,
                                 "set": encode_set(rec.set)}) + "\n")


def read_trace(path) -> ReachTrace:
    trace = ReachTrace()
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ModelFormatError(f"cannot read trace file: {exc}", "path") from None
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"invalid JSON on line {i + 1}: {exc}") from None
        if "meta" in rec:
            trace.meta = dict(rec["meta"])
            continue
        s = _require(rec, "set", f"line{i + 1}")
        n = len(s.get("lower", [])) if s.get("type") == "box" else len(s.get("H", [[]])[0])
        trace.append(int(_require(rec, "step", f"line{i + 1}")), str(rec.get("location", "main")),
                     decode_set(s, n, f"line{i + 1}.set"))
    steps = sorted({r.step for r in trace})
    if steps and steps != list(range(steps[0], steps[-1] + 1)):
        raise ModelFormatError("trace steps are not contiguous", "step")
    return trace
