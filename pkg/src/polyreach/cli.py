"""Command-line front end.

    polyreach run      --model M.json [--strategy S] [--steps K] [--template T] --out trace.jsonl
    polyreach project  --trace trace.jsonl --axes Y1,Y2 --out proj.csv
    polyreach compare  --model M.json [--steps K] [--tol 1e-6] [--out report.csv]
    polyreach selftest [--seed N]
    polyreach params   --model M.json [--steps K] [--fix u=0,t=0] --out region.csv
    polyreach models   (lists the bundled model files)

Errors are reported on stderr as one JSON object ``{"error", "message", "key"}``.
Exit codes: 0 success, 1 check failure, 2 input/parse error, 3 engine error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ModelFormatError, ReachError
from .geometry import Box, bounding_box, project_2d
from .reach import (ReachStrategy, forward_reach, hybrid_reach,
                    unsafe_param_region)
from .serialization import Model, load_model, read_trace, write_trace

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ENGINE = 0, 1, 2, 3


def _error(exc: Exception) -> int:
    rec = {"error": type(exc).__name__, "message": str(exc), "key": getattr(exc, "key", None)}
    print(json.dumps(rec), file=sys.stderr)
    return EXIT_INPUT if isinstance(exc, (InvalidInputError, OSError)) else EXIT_ENGINE


def bundled_models() -> dict[str, Path]:
    root = resources.files("polyreach") / "data"
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_model(path: str) -> Path:
    """A file path, or the name of a bundled model (``bees_no_consensus``, ``cardiac``, ...)."""
    p = Path(path)
    if p.exists():
        return p
    models = bundled_models()
    if path in models:
        return models[path]
    raise ModelFormatError(f"no model file or bundled model named {path!r}", "model")


def make_strategy(model: Model, kind: str | None = None, template=None) -> ReachStrategy:
    opts = dict(model.strategy)
    kind = kind or opts.get("kind", "multiaffine")
    splits = opts.get("param_splits")
    if kind != "multiaffine":
        splits = None
    return ReachStrategy(kind=kind, template=template if template is not None else model.template,
                         param_splits=tuple(splits) if splits else None)


def _parse_template(arg: str | None, n: int):
    if arg is None:
        return None
    if arg in ("box", "octagon"):
        return arg
    rows = json.loads(Path(arg).read_text())
    rows = rows["H"] if isinstance(rows, dict) else rows
    H = np.asarray(rows, dtype=float)
    if H.ndim != 2 or H.shape[1] != n:
        raise ModelFormatError(f"template file must hold rows of length {n}", "template")
    return H


def _axis_index(token: str, variables: list[str] | None) -> int:
    token = token.strip()
    if variables and token in variables:
        return variables.index(token)
    try:
        return int(token)
    except ValueError:
        raise InvalidInputError(f"unknown axis {token!r}") from None


def run_model(model: Model, strategy: ReachStrategy, steps: int):
    if model.hybrid is not None:
        return hybrid_reach(model.hybrid, strategy, steps)
    return forward_reach(model.system, model.initial, strategy, steps, model.events)


# -- commands ------------------------------------------------------------------------


def cmd_run(model_path, strategy=None, steps=None, out_path=None, template=None) -> int:
    try:
        model = load_model(resolve_model(model_path))
        tpl = _parse_template(template, model.dim)
        strat = make_strategy(model, strategy, tpl)
        k = model.steps if steps is None else int(steps)
        if k < 0:
            raise InvalidInputError("steps must be non-negative")
    except (ReachError, OSError, ValueError) as exc:
        return _error(exc if isinstance(exc, ReachError) else InvalidInputError(str(exc)))
    try:
        t0 = time.perf_counter()
        trace = run_model(model, strat, k)
        wall = (time.perf_counter() - t0) * 1000
    except ReachError as exc:
        return _error(exc)
    meta = {"model": model.name, "variables": model.variables, "strategy": strat.kind,
            "template": strat.template if isinstance(strat.template, str) else np.asarray(strat.template).tolist(),
            "steps": k, "wall_time_ms": wall, "config": model.extra}
    write_trace(trace, out_path, meta)
    print(f"{model.name}: {len(trace)} records over {trace.n_steps} steps in {wall:.0f} ms -> {out_path}")
    return EXIT_OK


def cmd_project(trace_path, axes, out_path) -> int:
    try:
        trace = read_trace(trace_path)
        variables = trace.meta.get("variables")
        a, b = (_axis_index(t, variables) for t in axes.split(","))
        n = trace.records[0].set.dim if trace.records else 0
        if not (0 <= a < n and 0 <= b < n):
            raise InvalidInputError(f"axes out of range for dimension {n}")
    except (ReachError, ValueError) as exc:
        return _error(exc if isinstance(exc, ReachError) else InvalidInputError(str(exc)))
    multi = len(trace.locations()) > 1
    boxes = all(isinstance(r.set, Box) for r in trace)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if boxes:
            w.writerow(["step", "axis1_min", "axis1_max", "axis2_min", "axis2_max"] + (["location"] if multi else []))
            for r in trace:
                s = r.set
                row = [r.step, repr(float(s.lower[a])), repr(float(s.upper[a])),
                       repr(float(s.lower[b])), repr(float(s.upper[b]))]
                w.writerow(row + ([r.location] if multi else []))
        else:
            w.writerow(["step", "vertex", "axis1", "axis2"] + (["location"] if multi else []))
            for r in trace:
                for v, (x, y) in enumerate(project_2d(r.set, (a, b))):
                    w.writerow([r.step, v, repr(float(x)), repr(float(y))] + ([r.location] if multi else []))
    print(f"projected {len(trace)} records onto axes ({a}, {b}) -> {out_path}")
    return EXIT_OK


def compare_strategies(model: Model, steps: int, tol: float = 1e-6, template=None):
    """Run both strategies; returns ``(rows, times, contained)`` with per-step volumes."""
    if model.hybrid is not None:
        raise InvalidInputError("compare needs a single-system model")
    results, times = {}, {}
    for kind in ("multiaffine", "bernstein"):
        strat = make_strategy(model, kind, template)
        t0 = time.perf_counter()
        results[kind] = run_model(model, strat, steps)
        times[kind] = time.perf_counter() - t0
    ma, bt = results["multiaffine"], results["bernstein"]
    rows, contained = [], True
    for k in range(min(ma.n_steps, bt.n_steps)):
        A = bounding_box(bt.set_at(k))
        B = ma.set_at(k)
        excess = float(np.maximum(A.upper - B.upper, B.lower - A.lower).max())
        ok = excess <= tol
        contained &= ok
        rows.append((k, A.volume, B.volume, excess, ok))
    return rows, times, contained


def cmd_compare(model_path, steps=None, tol=1e-6, out_path=None, template=None) -> int:
    try:
        model = load_model(resolve_model(model_path))
        k = model.steps if steps is None else int(steps)
        rows, times, contained = compare_strategies(model, k, tol, _parse_template(template, model.dim))
    except (ReachError, ValueError) as exc:
        return _error(exc if isinstance(exc, ReachError) else InvalidInputError(str(exc)))
    header = ["step", "bernstein_volume", "multiaffine_volume", "max_excess", "contained"]
    if out_path:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([r[0], repr(r[1]), repr(r[2]), repr(r[3]), int(r[4])] for r in rows)
    bad = [r[0] for r in rows if not r[4]]
    ratio = times["bernstein"] / max(times["multiaffine"], 1e-9)
    print(f"multiaffine {times['multiaffine']:.3f}s, bernstein {times['bernstein']:.3f}s (ratio {ratio:.1f})")
    print(f"bernstein boxes inside multiaffine boxes (+{tol:g}): "
          f"{'yes' if contained else 'no'} ({len(rows) - len(bad)}/{len(rows)} steps; "
          f"worst excess {max(r[3] for r in rows):.3g})")
    return EXIT_OK if contained else EXIT_FAIL


def cmd_params(model_path, steps=None, fix=None, out_path=None, strategy=None, grid=None) -> int:
    try:
        model = load_model(resolve_model(model_path))
        if model.hybrid is None or not model.unsafe:
            raise InvalidInputError("params needs a hybrid model with an unsafe section")
        region = model.region
        axes = tuple(region.get("param_axes", ()))
        if len(axes) != 2:
            raise ModelFormatError("two parameter axes required", "hybrid.region.param_axes")
        if fix:
            fixes = []
            for part in fix.split(","):
                name, _, value = part.partition("=")
                fixes.append((_axis_index(name, model.variables), float(value)))
        else:
            fixes = [(int(a), float(v)) for a, v in region.get("fix", [])]
        if not fixes:
            raise InvalidInputError("no hyperplane to cut with: pass --fix or set hybrid.region.fix")
        g = tuple(int(v) for v in (grid.split(",") if grid else region.get("grid", (1, 1))))
        k = model.steps if steps is None else int(steps)
        strat = make_strategy(model, strategy)
        t0 = time.perf_counter()
        boxes = unsafe_param_region(model.hybrid, model.unsafe, strat, k, axes, fixes,
                                    region.get("locations"), g)
        wall = time.perf_counter() - t0
    except (ReachError, ValueError) as exc:
        return _error(exc if isinstance(exc, ReachError) else InvalidInputError(str(exc)))
    names = [model.variables[a] for a in axes]
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{names[0]}_min", f"{names[0]}_max", f"{names[1]}_min", f"{names[1]}_max"])
        for b in boxes:
            w.writerow([repr(float(b.lower[0])), repr(float(b.upper[0])),
                        repr(float(b.lower[1])), repr(float(b.upper[1]))])
    print(f"{len(boxes)} region boxes in {wall:.1f}s -> {out_path}")
    return EXIT_OK


def cmd_selftest(seed: int = 0) -> int:
    from .selftest import run_selftest
    results = run_selftest(seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_FAIL


def cmd_models() -> int:
    for name, path in sorted(bundled_models().items()):
        print(f"{name}\t{path}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyreach", description="Reachability of parametric polynomial maps.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compute a reach trace")
    p.add_argument("--model", required=True)
    p.add_argument("--strategy", choices=("bernstein", "multiaffine"))
    p.add_argument("--steps", type=int)
    p.add_argument("--template", help="box, octagon, or a JSON file of template rows")
    p.add_argument("--out", required=True)

    p = sub.add_parser("project", help="project a trace onto two axes (CSV)")
    p.add_argument("--trace", required=True)
    p.add_argument("--axes", required=True, help="two names or indices, comma separated")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="run both strategies and check box containment")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--template")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out")

    p = sub.add_parser("selftest", help="golden example and small property checks")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("params", help="backward parameter-region analysis of a hybrid model")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--fix", help="hyperplanes like u=0,t=0 (default: from the model)")
    p.add_argument("--grid", help="cells per parameter axis, e.g. 8,8")
    p.add_argument("--strategy", choices=("bernstein", "multiaffine"))
    p.add_argument("--out", required=True)

    sub.add_parser("models", help="list bundled model files")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.model, args.strategy, args.steps, args.out, args.template)
    if args.command == "project":
        return cmd_project(args.trace, args.axes, args.out)
    if args.command == "compare":
        return cmd_compare(args.model, args.steps, args.tol, args.out, args.template)
    if args.command == "selftest":
        return cmd_selftest(args.seed)
    if args.command == "params":
        return cmd_params(args.model, args.steps, args.fix, args.out, args.strategy, args.grid)
    return cmd_models()


if __name__ == "__main__":
    sys.exit(main())
