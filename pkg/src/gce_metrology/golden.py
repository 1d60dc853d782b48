"""Golden-file regression runner.

A golden case is ``<name>.scenario.json`` next to a directory ``<name>/``
holding the artifacts the scenario produced when the goldens were last
regenerated.  Numbers are compared after parsing, within 1e-12.
"""
import csv
import io
import json
import math
import os

from .cli import load_scenario, render, run_scenario, write_artifacts

GOLDEN_TOL = 1e-12


def _close(a, b, tol):
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_close(x, y, tol) for x, y in zip(a, b))
    return a == b


def _cells(text):
    rows = list(csv.reader(io.StringIO(text)))
    out = []
    for row in rows:
        parsed = []
        for cell in row:
            try:
                parsed.append(float(cell))
            except ValueError:
                parsed.append(cell)
        out.append(parsed)
    return out


def compare_text(name, got, want, tol=GOLDEN_TOL):
    if name.endswith(".json"):
        return _close(json.loads(got), json.loads(want), tol)
    return _close(_cells(got), _cells(want), tol)


def golden_cases(directory):
    return sorted(f[: -len(".scenario.json")] for f in os.listdir(directory) if f.endswith(".scenario.json"))


def run_golden(directory, regenerate=False, tol=GOLDEN_TOL):
    """``[(name, ok, message)]`` for every golden case in ``directory``."""
    results = []
    for name in golden_cases(directory):
        doc = load_scenario(os.path.join(directory, f"{name}.scenario.json"))
        artifacts = run_scenario(doc)
        target = os.path.join(directory, name)
        if regenerate:
            write_artifacts(artifacts, target)
            results.append((name, True, "regenerated"))
            continue
        bad = []
        for fname, text in render(artifacts).items():
            path = os.path.join(target, fname)
            if not os.path.exists(path):
                bad.append(f"{fname} missing")
                continue
            with open(path, encoding="utf-8") as fh:
                if not compare_text(fname, text, fh.read(), tol):
                    bad.append(f"{fname} differs")
        results.append((name, not bad, "; ".join(bad)))
    return results
