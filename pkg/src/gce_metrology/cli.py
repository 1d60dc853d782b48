"""Scenario-driven command line front end.

Every subcommand reads a scenario ``{"version": 1, "command": ..., "payload":
..., "seed": ...}``, validates it against the bundled JSON schema and writes
its artifacts to ``--out`` (or prints the main one to stdout).

Exit codes: 0 success, 2 validation error, 3 numerical tolerance failure,
1 anything unexpected.
"""
import argparse
import json
import sys
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .bayes import BayesModel, personick, personick_after, weak_value_estimator
from .dp import DpProblem, composed_divergence, solve_dp
from .errors import GceError, ToleranceError, ValidationError
from .gaussian import GaussianChannel, GaussianState, classical_lg_oracle, gauss_gce
from .gce import chain_gce, gce
from .io import (channel_from_doc, dumps_csv, dumps_json, emit_csv, emit_json, operator_from_doc,
                 operators_from_doc)
from .operators import ProductKind
from .parallel import resolve_threads
from .rao_blackwell import (AncillaDiscard, DirectSum, FreqModel, GenericChannel, PermutationHaar,
                            SinhaStatistic, Symmetrize, rb_apply)
from .selftest import run_selftest
from .thermal import CSV_HEADER as THERMAL_HEADER
from .thermal import thermal_mse_curve, x_grid

COMMANDS = ("gce", "bayes", "dp", "rb", "gauss", "thermal", "selftest")
EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_TOLERANCE = 0, 1, 2, 3


@lru_cache(maxsize=None)
def scenario_schema():
    text = resources.files("gce_metrology").joinpath("schemas/scenario.json").read_text(encoding="utf-8")
    return json.loads(text)


def _schema_error(err, where):
    path = "/".join(str(p) for p in err.absolute_path)
    return ValidationError(f"{where}{'/' + path if path else ''}: {err.message}", module="cli")


def validate_scenario(doc):
    """Check the envelope, then the command payload; returns ``doc``."""
    schema = scenario_schema()
    try:
        jsonschema.validate(doc, {k: v for k, v in schema.items() if k != "$defs"})
    except jsonschema.ValidationError as err:
        raise _schema_error(err, "scenario") from None
    payload_schema = {"$defs": schema["$defs"], "$ref": f"#/$defs/{doc['command']}"}
    try:
        jsonschema.validate(doc["payload"], payload_schema)
    except jsonschema.ValidationError as err:
        raise _schema_error(err, "payload") from None
    return doc


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ValidationError(f"cannot read scenario {path!r}: {err.strerror}", module="cli") from None
    except json.JSONDecodeError as err:
        raise ValidationError(f"scenario {path!r} is not valid JSON: {err}", module="cli") from None
    return validate_scenario(doc)


# --------------------------------------------------------------------------
# Command handlers.  Each returns an ordered dict of artifacts:
# filename -> ("json", doc) or ("csv", (header, rows)).
# --------------------------------------------------------------------------

def _product(payload):
    return ProductKind.parse(payload.get("product", "JORDAN"))


def _gce_result_doc(res):
    return {"estimator": res.estimator, "residual": res.residual, "min_divergence": res.min_divergence}


def cmd_gce(payload, seed, threads):
    product = _product(payload)
    sigma = operator_from_doc(payload["sigma"], "sigma")
    a = operator_from_doc(payload["observable"], "observable")
    if "channel" in payload:
        doc = _gce_result_doc(gce(product, sigma, channel_from_doc(payload["channel"]), a))
    else:
        chain = [channel_from_doc(c) for c in payload["channels"]]
        results = chain_gce(product, sigma, chain, a)
        doc = {"estimator": results[-1].estimator,
               "residual": max(r.residual for r in results),
               "min_divergence": float(sum(r.min_divergence for r in results)),
               "stages": [_gce_result_doc(r) for r in results]}
    doc["product"] = product.value
    return {"gce.json": ("json", doc)}


def cmd_bayes(payload, seed, threads):
    model = BayesModel(payload.get("labels"), payload["prior"],
                       operators_from_doc(payload["states"], "states"), payload["values"])
    pers = personick(model)
    doc = {"estimator": pers.estimator, "bayes_mse": pers.bayes_mse,
           "prior_mean": model.prior_mean, "prior_variance": model.prior_variance}
    out = {}
    if "decoherence" in payload:
        after = personick_after(model, channel_from_doc(payload["decoherence"]))
        doc["after_decoherence"] = {"estimator": after.estimator, "bayes_mse": after.bayes_mse,
                                    "regret": after.regret}
    if "povm" in payload:
        povm = operators_from_doc(payload["povm"], "povm")
        b, rep = weak_value_estimator(model, povm)
        rho = model.mixture().matrix
        probs = [float(np.trace(m @ rho).real) for m in povm]
        doc["weak_values"] = {"values": b, "bayes_mse": rep.bayes_mse, "regret": rep.regret}
        out["bayes_outcomes.csv"] = ("csv", (("outcome", "probability", "weak_value"),
                                             [(y, p, float(v)) for y, (p, v) in enumerate(zip(probs, b))]))
    return {"bayes.json": ("json", doc), **out}


def cmd_dp(payload, seed, threads):
    stages = [[channel_from_doc(c) for c in opts] for opts in payload["stages"]]
    problem = DpProblem(operator_from_doc(payload["sigma0"], "sigma0"),
                        operator_from_doc(payload["a0"], "a0"), stages, _product(payload))
    sol = solve_dp(problem, threads)
    doc = {"policy": list(sol.policy), "stage_regrets": sol.stage_costs, "total_cost": sol.total_cost,
           "composed_divergence": composed_divergence(problem, sol.policy)}
    rows = [("-".join(str(c) for c in prefix), len(prefix), cost, best)
            for prefix, cost, best in sol.value_rows()]
    return {"dp.json": ("json", doc),
            "dp_values.csv": ("csv", (("prefix", "stage", "cost_to_go", "best_next"), rows))}


def _construction(spec):
    kind, params = spec["kind"], spec.get("params", {})
    try:
        if kind == "ancilla":
            return AncillaDiscard(int(params["dim1"]), operator_from_doc(params["tau"], "tau"))
        if kind == "symmetrize":
            return Symmetrize(tuple(operators_from_doc(params["unitaries"], "unitaries")), params.get("weights"))
        if kind == "permutation":
            return PermutationHaar(int(params["n"]), int(params["subsystem_dim"]))
        if kind == "direct_sum":
            return DirectSum(tuple(operators_from_doc(params["projectors"], "projectors")))
        if kind == "sinha":
            return SinhaStatistic(tuple(operators_from_doc(params["projectors"], "projectors")),
                                  tuple(operators_from_doc(params["sigma_blocks"], "sigma_blocks")))
        return GenericChannel(channel_from_doc(params["channel"]))
    except KeyError as err:
        raise ValidationError(f"construction '{kind}' is missing parameter {err.args[0]!r}",
                              module="rao-blackwell") from None


def cmd_rb(payload, seed, threads):
    m = payload["model"]
    model = FreqModel(m.get("grid"), operators_from_doc(m["states"], "states"), m["values"])
    b = operator_from_doc(payload["estimator"], "estimator")
    out = rb_apply(model, b, _construction(payload["construction"]), threads=threads)
    rows = [(x if isinstance(x, (int, float)) else str(x), float(o), float(r), float(g))
            for x, o, r, g in zip(model.grid, out.original_mse, out.rb_mse, out.gap)]
    doc = {"estimator": out.estimator, "divergence": out.divergence}
    return {"rb.csv": ("csv", (("x", "mse_original", "mse_rb", "gap"), rows)), "rb.json": ("json", doc)}


def cmd_gauss(payload, seed, threads):
    p = payload
    res = gauss_gce(GaussianState(p["m"], p["Sigma"]), GaussianChannel(p["F"], p["l"], p["R"]), p["u"])
    try:
        _, _, oracle = classical_lg_oracle(p["m"], p["Sigma"], p["F"], p["l"], p["R"], p["u"])
    except ValidationError:
        oracle = None  # singular joint covariance; the oracle does not apply
    doc = {"K": res.gain, "offset": res.offset, "v": res.coefficients, "divergence": res.divergence,
           "oracle_divergence": oracle, "pseudoinverse": res.singular}
    return {"gauss.json": ("json", doc)}


def cmd_thermal(payload, seed, threads):
    xs = payload["grid"] if "grid" in payload else x_grid(payload["xmin"], payload["xmax"], payload["points"])
    pts = thermal_mse_curve(payload["J"], xs, payload.get("cutoff", "auto"), threads=threads)
    return {"thermal.csv": ("csv", (THERMAL_HEADER, [p.row() for p in pts]))}


def cmd_selftest(payload, seed, threads):
    report = run_selftest(payload.get("instances", 50), 0 if seed is None else seed, payload.get("max_dim", 6))
    report.pop("seconds", None)
    if not report["passed"]:
        failed = ", ".join(c["name"] for c in report["checks"] if not c["passed"])
        raise ToleranceError(f"self-test failed: {failed}", module="cli")
    return {"selftest.json": ("json", report)}


HANDLERS = {"gce": cmd_gce, "bayes": cmd_bayes, "dp": cmd_dp, "rb": cmd_rb, "gauss": cmd_gauss,
            "thermal": cmd_thermal, "selftest": cmd_selftest}


def run_scenario(doc, seed=None, threads=None):
    """Validate and execute a scenario document; returns its artifacts."""
    validate_scenario(doc)
    seed = doc.get("seed") if seed is None else seed
    return HANDLERS[doc["command"]](doc["payload"], seed, resolve_threads(threads))


def render(artifacts):
    """Artifact name -> file text."""
    out = {}
    for name, (kind, content) in artifacts.items():
        out[name] = dumps_json(content) if kind == "json" else dumps_csv(*content)
    return out


def write_artifacts(artifacts, out_dir):
    import os
    paths = []
    for name, (kind, content) in artifacts.items():
        path = os.path.join(out_dir, name)
        (emit_json if kind == "json" else emit_csv)(content, path)
        paths.append(path)
    return paths


# --------------------------------------------------------------------------
# Entry point.
# --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--out", help="output directory (default: print to stdout)")
    p.add_argument("--seed", type=int, help="overrides the scenario seed")
    p.add_argument("--threads", type=int, help="worker threads (default: $GCE_METROLOGY_THREADS or 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="gce-metrology",
                                     description="Generalized conditional expectations for quantum metrology.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "thermal":
            p.add_argument("--J", type=int, dest="J")
            p.add_argument("--xmin", type=float)
            p.add_argument("--xmax", type=float)
            p.add_argument("--points", type=int)
            p.add_argument("--cutoff", default=None, help="'auto' or a per-mode photon cutoff")
        if name == "selftest":
            p.add_argument("--instances", type=int)
    p = sub.add_parser("run", help="run a scenario whatever its command")
    _common(p)
    p = sub.add_parser("golden", help="compare golden scenarios against their stored outputs")
    p.add_argument("directory")
    p.add_argument("--regenerate", action="store_true")
    return parser


def _flag_scenario(args):
    """Scenario built from subcommand flags, or ``None`` if no flags were given."""
    if args.command == "thermal":
        flags = {k: getattr(args, k) for k in ("J", "xmin", "xmax", "points", "cutoff")}
        given = {k: v for k, v in flags.items() if v is not None}
        if not given:
            return None
        if "cutoff" in given and given["cutoff"] != "auto":
            try:
                given["cutoff"] = int(given["cutoff"])
            except ValueError:
                raise ValidationError("--cutoff must be 'auto' or an integer", module="cli") from None
        return {"version": 1, "command": "thermal", "payload": given}
    if args.command == "selftest":
        payload = {} if args.instances is None else {"instances": args.instances}
        return {"version": 1, "command": "selftest", "payload": payload}
    return None


def _fail(err, code):
    doc = {"error": type(err).__name__, "module": getattr(err, "module", None) or "cli", "message": str(err)}
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "golden":
            from .golden import run_golden
            results = run_golden(args.directory, regenerate=args.regenerate)
            for name, ok, msg in results:
                print(f"{'PASS' if ok else 'FAIL'} {name}{': ' + msg if msg else ''}")
            return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_TOLERANCE
        flag_doc = _flag_scenario(args)
        if args.scenario and flag_doc is not None and args.command == "thermal":
            raise ValidationError("give either --scenario or the thermal grid flags, not both", module="cli")
        if args.scenario:
            doc = load_scenario(args.scenario)
            if args.command != "run" and doc["command"] != args.command:
                raise ValidationError(f"scenario command is '{doc['command']}', not '{args.command}'",
                                      module="cli")
        elif flag_doc is not None:
            doc = flag_doc
        else:
            raise ValidationError(f"'{args.command}' needs --scenario", module="cli")
        artifacts = run_scenario(doc, args.seed, args.threads)
        if args.out:
            write_artifacts(artifacts, args.out)
        else:
            first = next(iter(render(artifacts).values()))
            sys.stdout.write(first)
        return EXIT_OK
    except (ToleranceError, np.linalg.LinAlgError) as err:
        # LinAlgError subclasses ValueError, so it must be caught first
        return _fail(err, EXIT_TOLERANCE)
    except (ValidationError, ValueError) as err:
        return _fail(err, EXIT_VALIDATION)
    except GceError as err:
        return _fail(err, EXIT_VALIDATION)
    except Exception as err:  # never a traceback on the console
        return _fail(err, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
