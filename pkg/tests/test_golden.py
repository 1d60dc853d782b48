from pathlib import Path

import pytest

from gce_metrology.cli import load_scenario, render, run_scenario
from gce_metrology.golden import compare_text, golden_cases, run_golden

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name", golden_cases(GOLDEN))
def test_golden_case_matches(name):
    doc = load_scenario(GOLDEN / f"{name}.scenario.json")
    for fname, text in render(run_scenario(doc)).items():
        want = (GOLDEN / name / fname).read_text(encoding="utf-8")
        assert compare_text(fname, text, want, 1e-12), fname


def test_runner_reports_every_case():
    results = run_golden(GOLDEN)
    assert [r[0] for r in results] == golden_cases(GOLDEN)
    assert all(ok for _, ok, _ in results)


def test_runner_flags_drift(tmp_path):
    src = GOLDEN / "thermal_j1_x1.scenario.json"
    (tmp_path / src.name).write_text(src.read_text())
    run_golden(tmp_path, regenerate=True)
    csv = tmp_path / "thermal_j1_x1" / "thermal.csv"
    lines = csv.read_text().splitlines()
    cells = lines[1].split(",")
    cells[1] = repr(float(cells[1]) * (1 + 1e-9))
    csv.write_text("\n".join([lines[0], ",".join(cells)]) + "\n")
    [(name, ok, msg)] = run_golden(tmp_path)
    assert not ok and "thermal.csv differs" in msg


def test_compare_tolerates_last_digit_noise():
    assert compare_text("a.csv", "x\n1.0000000000000002\n", "x\n1\n")
    assert not compare_text("a.csv", "x\n1.000001\n", "x\n1\n")
    assert compare_text("a.json", '{"v": [0.1, null]}', '{"v": [0.10000000000000001, null]}')
