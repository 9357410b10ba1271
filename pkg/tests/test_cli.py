import csv
import json

import numpy as np
import pytest

from polyreach.cli import bundled_models, compare_strategies, main
from polyreach.errors import ModelFormatError
from polyreach.geometry import Box, TemplatePolyhedron
from polyreach.reach import ReachTrace
from polyreach.serialization import (load_model, parse_model, read_trace, save_model,
                                     serialize_model, write_trace)

LOTKA = {
    "name": "lotka",
    "variables": ["x", "y"],
    "parameters": [{"name": "a", "interval": [0.9, 1.1]}],
    "h": 0.01,
    "dynamics": [
        [{"exponents": [1, 0], "coeff_const": 0.0, "coeff_params": [1.0]},
         {"exponents": [1, 1], "coeff_const": -1.0, "coeff_params": [0.0]}],
        [{"exponents": [1, 1], "coeff_const": 1.0, "coeff_params": [0.0]},
         {"exponents": [0, 1], "coeff_const": -1.0, "coeff_params": [0.0]}],
    ],
    "initial": {"type": "box", "lower": [0.9, 0.4], "upper": [1.1, 0.6]},
    "events": [{"step": 3, "shift": [0.1, 0.0]}],
    "steps": 10,
}


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "lotka.json"
    p.write_text(json.dumps(LOTKA))
    return p


def test_model_roundtrip(tmp_path, model_file):
    m = load_model(model_file)
    assert m.dim == 2 and m.parameters == ["a"] and m.steps == 10
    assert np.allclose(m.events[3], [0.1, 0.0])
    out = tmp_path / "again.json"
    save_model(m, out)
    m2 = load_model(out)
    x, p = np.array([1.0, 0.5]), np.array([1.05])
    assert np.array_equal(m.system.step(x, p), m2.system.step(x, p))
    assert serialize_model(m2) == serialize_model(m)


def test_bundled_models_roundtrip():
    names = bundled_models()
    assert {"bees_no_consensus", "bees_site2", "bees_site1", "bees_precision", "cardiac"} <= set(names)
    for path in names.values():
        m = load_model(path)
        assert parse_model(serialize_model(m)) is not None


def test_parse_errors_report_key():
    bad = dict(LOTKA, initial={"type": "box", "lower": [0.0], "upper": [1.0, 1.0]})
    with pytest.raises(ModelFormatError) as ei:
        parse_model(bad)
    assert ei.value.key.startswith("initial")
    with pytest.raises(ModelFormatError):
        parse_model(dict(LOTKA, variables=[]))
    with pytest.raises(ModelFormatError):
        parse_model({k: v for k, v in LOTKA.items() if k != "dynamics"})


def test_trace_roundtrip(tmp_path):
    tr = ReachTrace(meta={"strategy": "x"})
    tr.append(0, "a", Box.from_intervals([(0, 1)]))
    tr.append(1, "a", TemplatePolyhedron([[1.0], [-1.0]], [2.0, 0.5]))
    write_trace(tr, tmp_path / "t.jsonl")
    back = read_trace(tmp_path / "t.jsonl")
    assert back.meta["strategy"] == "x" and back.n_steps == 2
    assert back.set_at(0, "a").allclose(tr.set_at(0, "a"))
    assert np.array_equal(back.set_at(1, "a").c, [2.0, 0.5])


def test_trace_gap_rejected(tmp_path):
    p = tmp_path / "t.jsonl"
    rec = lambda k: json.dumps({"step": k, "location": "main",
                                "set": {"type": "box", "lower": [0], "upper": [1]}})
    p.write_text(rec(0) + "\n" + rec(2) + "\n")
    with pytest.raises(ModelFormatError):
        read_trace(p)


def test_cli_run_and_project(tmp_path, model_file):
    out = tmp_path / "trace.jsonl"
    assert main(["run", "--model", str(model_file), "--out", str(out)]) == 0
    tr = read_trace(out)
    assert tr.n_steps == 11
    proj = tmp_path / "proj.csv"
    assert main(["project", "--trace", str(out), "--axes", "0,1", "--out", str(proj)]) == 0
    rows = list(csv.reader(proj.open()))
    assert len(rows) > 11


def test_cli_run_bernstein_steps_zero(tmp_path, model_file):
    out = tmp_path / "trace.jsonl"
    rc = main(["run", "--model", str(model_file), "--strategy", "bernstein", "--steps", "0",
               "--out", str(out)])
    assert rc == 0
    assert read_trace(out).n_steps == 1


def test_cli_parse_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "trace.jsonl"
    assert main(["run", "--model", str(bad), "--out", str(out)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ModelFormatError"
    assert not out.exists()
    assert main(["run", "--model", "no_such_model", "--out", str(out)]) == 2


def test_cli_selftest_and_models(capsys):
    assert main(["selftest"]) == 0
    assert main(["models"]) == 0
    assert "cardiac" in capsys.readouterr().out


def test_cli_compare_on_small_model(tmp_path, model_file):
    m = load_model(model_file)
    rows, times, contained = compare_strategies(m, 5, 1e-6, "box")
    assert len(rows) == 6 and set(times) == {"bernstein", "multiaffine"}
    report = tmp_path / "r.csv"
    rc = main(["compare", "--model", str(model_file), "--steps", "5", "--out", str(report)])
    assert rc == (0 if contained else 1)
    assert report.exists()
