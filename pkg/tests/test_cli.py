import json
from pathlib import Path

import numpy as np
import pytest

from gce_metrology import cli
from gce_metrology.cli import main, run_scenario, validate_scenario
from gce_metrology.errors import ValidationError
from gce_metrology.io import dumps_json, emit_csv, emit_json, operator_from_doc, read_csv
from gce_metrology.parallel import resolve_threads

GOLDEN = Path(__file__).parent / "golden"


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def golden_doc(name):
    return json.loads((GOLDEN / f"{name}.scenario.json").read_text())


def err_doc(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.mark.parametrize("name,command,files", [
    ("thermal_j1_x1", "thermal", ["thermal.csv"]),
    ("bayes_worked_qubit", "bayes", ["bayes.json", "bayes_outcomes.csv"]),
    ("gauss_hand", "gauss", ["gauss.json"]),
    ("gce_dephasing_chain", "gce", ["gce.json"]),
    ("dp_two_stage", "dp", ["dp.json", "dp_values.csv"]),
    ("rb_direct_sum", "rb", ["rb.csv", "rb.json"]),
])
def test_subcommand_writes_artifacts(tmp_path, name, command, files):
    scen = write(tmp_path, golden_doc(name))
    out = tmp_path / "out"
    assert main([command, "--scenario", scen, "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == sorted(files)
    for f in files:
        raw = (out / f).read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        raw.decode("utf-8")


@pytest.mark.parametrize("name", ["bayes_worked_qubit", "dp_two_stage", "thermal_j2_curve", "rb_direct_sum"])
def test_reruns_are_byte_identical(tmp_path, name):
    scen = write(tmp_path, golden_doc(name))
    main(["run", "--scenario", scen, "--out", str(tmp_path / "a"), "--seed", "5"])
    main(["run", "--scenario", scen, "--out", str(tmp_path / "b"), "--seed", "5"])
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    scen = write(tmp_path, golden_doc("thermal_j2_curve"))
    main(["thermal", "--scenario", scen, "--out", str(tmp_path / "one"), "--threads", "1"])
    monkeypatch.setenv("GCE_METROLOGY_THREADS", "4")
    main(["thermal", "--scenario", scen, "--out", str(tmp_path / "four")])
    assert (tmp_path / "one" / "thermal.csv").read_bytes() == (tmp_path / "four" / "thermal.csv").read_bytes()


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("GCE_METROLOGY_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("GCE_METROLOGY_THREADS")
    assert resolve_threads() == 1


def test_thermal_j1_x1_row(tmp_path):
    scen = write(tmp_path, {"version": 1, "command": "thermal", "payload": {"J": 1, "grid": [1]}})
    assert main(["thermal", "--scenario", scen, "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "thermal.csv")
    row = dict(zip(header, rows[0]))
    assert len(rows) == 1
    assert row["mse_homodyne_analytic"] == 4.5
    assert row["mse_counting_analytic"] == 2.0
    assert abs(row["mse_homodyne_numeric"] - 4.5) / 4.5 < 1e-4


def test_thermal_flags_match_scenario(tmp_path, capsys):
    assert main(["thermal", "--J", "1", "--xmin", "1", "--xmax", "1", "--points", "1"]) == 0
    from_flags = capsys.readouterr().out
    scen = write(tmp_path, {"version": 1, "command": "thermal", "payload": {"J": 1, "grid": [1]}})
    assert main(["thermal", "--scenario", scen]) == 0
    assert capsys.readouterr().out == from_flags


def test_selftest_exit_zero(tmp_path):
    assert main(["selftest", "--instances", "8", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "selftest.json").read_text())
    assert report["passed"] and all(c["passed"] for c in report["checks"])


def test_malformed_prior_exit_two(tmp_path, capsys):
    doc = golden_doc("bayes_worked_qubit")
    doc["payload"]["prior"] = [0.5, 0.4]
    assert main(["bayes", "--scenario", write(tmp_path, doc)]) == 2
    err = err_doc(capsys)
    assert "prior" in err["message"] and err["module"] == "bayes-estimation"


def test_thermal_cutoff_too_small_exit_three(tmp_path, capsys):
    scen = write(tmp_path, {"version": 1, "command": "thermal", "payload": {"J": 1, "grid": [10], "cutoff": 5}})
    assert main(["thermal", "--scenario", scen]) == 3
    assert err_doc(capsys)["error"] == "ToleranceError"


@pytest.mark.parametrize("mutate,fragment", [
    (lambda d: d.update(version=2), "scenario"),
    (lambda d: d.update(command="plot"), "scenario"),
    (lambda d: d.update(extra=1), "scenario"),
    (lambda d: d["payload"].pop("J"), "payload"),
    (lambda d: d["payload"].update(J=0), "payload"),
    (lambda d: d["payload"].update(cutoff="huge"), "payload"),
])
def test_schema_errors_exit_two(tmp_path, capsys, mutate, fragment):
    doc = {"version": 1, "command": "thermal", "payload": {"J": 1, "grid": [1]}}
    mutate(doc)
    assert main(["run", "--scenario", write(tmp_path, doc)]) == 2
    assert err_doc(capsys)["message"].startswith(fragment)


def test_payload_validated_before_compute():
    with pytest.raises(ValidationError):
        run_scenario({"version": 1, "command": "gauss", "payload": {"m": [0]}})


def test_unreadable_scenario_exit_two(tmp_path, capsys):
    assert main(["gce", "--scenario", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["gce", "--scenario", str(tmp_path / "bad.json")]) == 2
    assert "not valid JSON" in err_doc(capsys)["message"]


def test_command_mismatch_exit_two(tmp_path):
    assert main(["gce", "--scenario", write(tmp_path, golden_doc("gauss_hand"))]) == 2


def test_missing_scenario_exit_two(capsys):
    assert main(["gce"]) == 2
    assert "--scenario" in err_doc(capsys)["message"]


@pytest.mark.parametrize("exc,code", [
    (np.linalg.LinAlgError("singular"), 3),
    (RuntimeError("boom"), 1),
])
def test_errors_are_structured_not_tracebacks(tmp_path, capsys, monkeypatch, exc, code):
    def broken(payload, seed, threads):
        raise exc
    monkeypatch.setitem(cli.HANDLERS, "gauss", broken)
    assert main(["gauss", "--scenario", write(tmp_path, golden_doc("gauss_hand"))]) == code
    err = err_doc(capsys)
    assert set(err) == {"error", "module", "message"} and err["error"] == type(exc).__name__


def test_empty_table_header_only(tmp_path):
    emit_csv((("a", "b"), []), tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_bytes() == b"a,b\n"


def test_empty_thermal_grid_header_only():
    from gce_metrology.cli import render
    arts = run_scenario({"version": 1, "command": "thermal", "payload": {"J": 1, "grid": []}})
    assert render(arts)["thermal.csv"].count("\n") == 1


def test_json_operator_round_trip(tmp_path, rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    emit_json({"op": a, "x": 0.1}, tmp_path / "o.json")
    doc = json.loads((tmp_path / "o.json").read_text())
    assert np.array_equal(operator_from_doc(doc["op"]), a)
    assert doc["x"] == 0.1


def test_floats_have_seventeen_digits():
    assert "0.10000000000000001" in dumps_json({"x": 0.1})
    assert dumps_json({"x": -0.0}).strip().endswith('"x": 0\n}'.strip())


def test_validate_accepts_all_goldens():
    for p in GOLDEN.glob("*.scenario.json"):
        validate_scenario(json.loads(p.read_text()))


def test_golden_subcommand(capsys):
    assert main(["golden", str(GOLDEN)]) == 0
    assert all(line.startswith("PASS") for line in capsys.readouterr().out.splitlines())
