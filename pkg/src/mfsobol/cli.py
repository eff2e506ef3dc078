"""Batch command-line interface.

Subcommands ``pilot``, ``plan``, ``estimate``, ``curve`` and ``truth`` read
and write JSON documents (CSV for ``curve``). Floats are written with 17
significant digits in documents and 10 in tables, keys are sorted, and no
timestamps are recorded, so reruns produce byte-identical files.

Exit status: 0 success, 2 configuration or document error, 3 numerical
error, 4 operation unsupported for the chosen model.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .driver import DEFAULT_PILOT_SIZE, run_estimation, run_pilot
from .errors import ConfigError, DegeneratePilotWarning, MFSobolError, Unsupported
from .estimators import VarianceEstimates
from .models import make_model
from .planner import MU_MIN, CostModel, Plan, SplitMode, efficiency_curve, optimize_plan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_UNSUPPORTED = 4

_NUM = {"type": ["number", "null"]}
_MODEL_SCHEMA = {
    "type": "object",
    "required": ["name", "params"],
    "properties": {
        "name": {"type": "string"},
        "params": {"type": "object"},
        "input_dims": {"type": "array"},
        "x": {"type": "object"},
        "z": {"type": "object"},
        "rho": {"type": "number"},
        "hierarchical": {"type": "boolean"},
    },
    "additionalProperties": False,
}
_ESTIMATES_SCHEMA = {
    "type": "object",
    "required": ["sigma_t_eta", "sigma_c", "sigma_e", "pilot_size"],
    "properties": {
        "sigma_t_eta": {"type": "number", "minimum": 0},
        "sigma_c": {"type": "number", "minimum": 0},
        "sigma_e": {"type": "number", "minimum": 0},
        "s_hat": _NUM,
        "s_c_hat": _NUM,
        "var_y": _NUM,
        "var_yc": _NUM,
        "pilot_size": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}
_COST_SCHEMA = {
    "type": "object",
    "required": ["rho", "hierarchical"],
    "properties": {
        "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "hierarchical": {"type": "boolean"},
    },
    "additionalProperties": False,
}
_COMMON = {
    "kind": {"type": "string"},
    "tool_version": {"type": "string"},
    "master_seed": {"type": "integer"},
    "model": _MODEL_SCHEMA,
    "model_fingerprint": {"type": "string"},
    "cost_model": _COST_SCHEMA,
    "estimates": _ESTIMATES_SCHEMA,
}
PILOT_SCHEMA = {
    "type": "object",
    "required": list(_COMMON),
    "properties": {**_COMMON, "kind": {"const": "pilot"}},
    "additionalProperties": False,
}
PLAN_SCHEMA = {
    "type": "object",
    "required": [*_COMMON, "plan"],
    "properties": {**_COMMON, "kind": {"const": "plan"}, "plan": {"type": "object"}},
    "additionalProperties": False,
}


# serialisation ---------------------------------------------------------------
def _encode(obj, digits: int) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return "null" if not math.isfinite(x) else format(x, f".{digits}g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_encode(obj[k], digits)}" for k in sorted(obj))
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v, digits) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_document(doc: dict) -> str:
    return _encode(doc, 17) + "\n"


def write_document(path, doc: dict):
    Path(path).write_text(dumps_document(doc))


def load_document(path, schema: dict) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {exc.message}") from None
    return doc


def _header(kind: str, model, master_seed: int) -> dict:
    return {
        "kind": kind,
        "tool_version": __version__,
        "master_seed": int(master_seed),
        "model": model.descriptor(),
        "model_fingerprint": model.fingerprint(),
    }


def _model_from_args(args):
    params = {}
    for item in args.param or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        params[key.strip()] = value.strip()
    try:
        return make_model(args.model, **params)
    except ValueError as exc:
        if isinstance(exc, MFSobolError):
            raise
        raise ConfigError(str(exc)) from None


# subcommands -----------------------------------------------------------------
def cmd_pilot(args) -> dict:
    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    model = _model_from_args(args)
    estimates, _ = run_pilot(model, args.n, args.seed, workers=args.workers)
    doc = _header("pilot", model, args.seed)
    doc["cost_model"] = {"rho": model.rho, "hierarchical": model.hierarchical}
    doc["estimates"] = estimates.to_dict()
    write_document(args.out, doc)
    return doc


def _pilot_inputs(path):
    doc = load_document(path, PILOT_SCHEMA)
    cm = doc["cost_model"]
    return doc, VarianceEstimates.from_dict(doc["estimates"]), CostModel(cm["rho"], cm["hierarchical"])


def cmd_plan(args) -> dict:
    doc, estimates, cost_model = _pilot_inputs(args.pilot)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePilotWarning)
        plan = optimize_plan(args.alpha, args.length, estimates, cost_model, args.mode, args.mu_min)
    out = {k: doc[k] for k in _COMMON if k != "kind"}
    out["kind"] = "plan"
    out["plan"] = plan.to_dict()
    write_document(args.out, out)
    return out


def cmd_estimate(args) -> dict:
    doc = load_document(args.plan, PLAN_SCHEMA)
    model = _model_from_args(args)
    if model.fingerprint() != doc["model_fingerprint"]:
        raise ConfigError(
            f"model fingerprint {model.fingerprint()} does not match plan ({doc['model_fingerprint']})"
        )
    try:
        plan = Plan.from_dict(doc["plan"])
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed plan: {exc}") from None
    report = run_estimation(model, plan, args.seed, workers=args.workers)
    out = _header("report", model, args.seed)
    out["report"] = report.to_dict()
    write_document(args.out, out)
    return out


def format_curve(points) -> str:
    rows = ["alpha,alpha_e,mu,efficiency"]
    for p in points:
        rows.append(",".join(format(v, ".10g") for v in (p.alpha, p.alpha_e, p.mu, p.efficiency)))
    return "\n".join(rows) + "\n"


def cmd_curve(args) -> str:
    if not 0 < args.alpha_min < args.alpha_max < 1:
        raise ConfigError("need 0 < alpha-min < alpha-max < 1")
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    _, estimates, cost_model = _pilot_inputs(args.pilot)
    grid = np.geomspace(args.alpha_min, args.alpha_max, args.points)
    points = efficiency_curve(grid, estimates, cost_model, args.mode, args.mu_min, workers=args.workers)
    text = format_curve(points)
    Path(args.out).write_text(text)
    return text


def cmd_truth(args) -> dict:
    model = _model_from_args(args)
    s, s_c = model.reference_index()
    doc = _header("truth", model, 0)
    del doc["master_seed"]
    doc["s"] = s
    doc["s_c"] = s_c
    write_document(args.out, doc)
    return doc


# argument parsing --------------------------------------------------------------
def _mode(value: str) -> SplitMode:
    try:
        return SplitMode.parse(value)
    except MFSobolError:
        raise argparse.ArgumentTypeError("mode must be 'theorem' or 'paper-figure'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfsobol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p):
        p.add_argument("--model", required=True)
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter or bound override")

    def workers(p):
        p.add_argument("--workers", type=int, default=1, help="threads used for model evaluations")

    p = sub.add_parser("pilot", help="estimate asymptotic standard deviations from a pilot sample")
    model_args(p)
    p.add_argument("--n", type=int, default=DEFAULT_PILOT_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    workers(p)
    p.set_defaults(func=cmd_pilot)

    p = sub.add_parser("plan", help="optimise (alpha_e, mu) for a target interval")
    p.add_argument("--pilot", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--mode", type=_mode, default=SplitMode.THEOREM)
    p.add_argument("--mu-min", type=float, default=MU_MIN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("estimate", help="run the two-sample estimator for a plan")
    model_args(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    workers(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("curve", help="tabulate efficiency against the risk level")
    p.add_argument("--pilot", required=True)
    p.add_argument("--alpha-min", type=float, default=1e-4)
    p.add_argument("--alpha-max", type=float, default=0.05)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--mode", type=_mode, default=SplitMode.THEOREM)
    p.add_argument("--mu-min", type=float, default=MU_MIN)
    p.add_argument("--out", required=True)
    workers(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("truth", help="closed-form Sobol indices of an analytic model")
    model_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_truth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"mfsobol: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Unsupported as exc:
        print(f"mfsobol: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except MFSobolError as exc:
        print(f"mfsobol: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
