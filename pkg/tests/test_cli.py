import json
import subprocess
import sys

import pytest

from dermkt.cli import main

REF = "examples/single_node.json"


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_reference(capsys):
    code, out, _ = run(["solve", REF, "--model", "benchmark"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["nodes"][0]["price"] == pytest.approx(2.00995049384, abs=1e-10)
    assert doc["kkt"]["is_equilibrium"] is True


def test_aggregation_reports_same_welfare(capsys):
    welfare = {}
    for model in ("benchmark", "aggregation", "no_der"):
        code, out, _ = run(["solve", REF, "--model", model], capsys)
        assert code == 0
        welfare[model] = json.loads(out)["welfare"]
    assert welfare["aggregation"] == welfare["benchmark"]
    assert welfare["no_der"] <= welfare["benchmark"]


def test_aggregation_lists_offers(capsys):
    _, out, _ = run(["solve", "single_node", "--model", "aggregation"], capsys)
    entry = json.loads(out)["prosumers"][0]
    assert entry["marginal_price"] == pytest.approx(2.00995049384)
    assert entry["participation_fee"] > 0


def test_solve_writes_file(tmp_path, capsys):
    path = tmp_path / "out.json"
    code, out, _ = run(["solve", "three_node", "--output", str(path)], capsys)
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["model"] == "benchmark"


def test_numbers_have_twelve_digits(capsys):
    _, out, _ = run(["solve", REF], capsys)
    welfare = json.loads(out)["welfare"]
    assert welfare == -76.6956347836


def test_input_errors_exit_one(tmp_path, capsys):
    code, _, err = run(["solve", str(tmp_path / "nope.json")], capsys)
    assert code == 1 and "no such file" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"network": {"nodes": ["a"]}, "prosumers": [{"id": "p"}], "extra": 1}')
    code, _, err = run(["validate", str(bad)], capsys)
    assert code == 1 and "unknown field 'extra'" in err


def test_validate_lists_violations(tmp_path, capsys):
    doc = {
        "network": {"nodes": ["a"]},
        "prosumers": [{"id": "p1", "node": "a", "capacity": 5.0, "z": 5.0,
                       "utility": {"type": "isoelastic", "eta": 0.0}}],
        "fixed_demand": [1.0],
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(["validate", str(path)], capsys)
    assert code == 1
    assert "prosumer p1: Z must exceed C" in err
    assert "strict concavity" in err
    assert "no generators" in err


def test_infeasible_scenario_exits_one(tmp_path, capsys):
    doc = {
        "network": {"nodes": ["a"]},
        "generators": [{"id": "g", "node": "a",
                        "cost": {"type": "quadratic", "alpha": 0.01, "beta": 1.0, "y_max": 10.0}}],
        "fixed_demand": [100.0],
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(["solve", str(path)], capsys)
    assert code == 1 and "error:" in err


def test_non_convergence_exits_two(monkeypatch, capsys):
    monkeypatch.setenv("DERMKT_MAX_ITERS", "1")
    code, _, err = run(["solve", "three_node"], capsys)
    assert code == 2 and "did not converge" in err


def test_loose_equilibrium_check_exits_two(capsys):
    code, _, err = run(["solve", "three_node", "--tol", "1e-20"], capsys)
    assert code == 2


def test_sweep_csv(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _, _ = run(["sweep", REF, "--from", "0", "--to", "100", "--steps", "51", "--output", str(path)], capsys)
    assert code == 0
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert len(lines) == 52
    assert lines[1].split(",")[4] == "1"


def test_sweep_failure_names_capacity(capsys):
    code, _, err = run(["sweep", "two_prosumers", "--steps", "3"], capsys)
    assert code == 1
    assert "capacity 0" in err


def test_sweep_literal_normalisation(capsys):
    _, opp, _ = run(["sweep", REF, "--steps", "3"], capsys)
    _, lit, _ = run(["sweep", REF, "--steps", "3", "--normalization", "literal"], capsys)
    assert opp != lit


def test_gen_random_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["gen-random", "--seed", "7", "--output", str(a)], capsys)[0] == 0
    assert run(["gen-random", "--seed", "7", "--output", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(["validate", str(a)], capsys)
    assert code == 0 and out.startswith("ok: 3 nodes")


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dermkt.cli", "solve", "single_node"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["model"] == "benchmark"
