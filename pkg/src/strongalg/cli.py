"""Command line front end: ``strongalg TASK --config cfg.json [--out report.json]``.

Exit status: 0 pass, 2 precondition failure, 3 numerical failure or failed
verdict, 4 I/O or schema error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import logging
import os
import sys

import jsonschema

from . import calculus, factorization, wiener
from .core import instance_from_spec, instance_spec, validate_strong_inequality
from .errors import NumericalFailure, PreconditionError, SchemaError, StrongAlgebraError
from .serialization import dumps, element_from_json, sha256_file, wiener_from_json

log = logging.getLogger("strongalg")

TASKS = ("validate", "invert", "wiener-invert", "scan", "factorize", "localize")

_grade = {"type": ["number", "integer"]}
_input = {"oneOf": [{"type": "string"}, {"type": "object"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "task": {"enum": list(TASKS)},
        "instance": {
            "type": "object",
            "properties": {"kind": {"enum": ["matrix", "germs", "kondratiev"]}},
            "required": ["kind"],
        },
        "inputs": {"type": "object", "additionalProperties": _input},
        "grades": {
            "type": "object",
            "properties": {"alpha": _grade, "beta": _grade, "gamma": _grade},
            "additionalProperties": False,
        },
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "grid_size": {"type": "integer", "minimum": 1},
        "t0": {"type": "number"},
        "output": {"type": "string"},
    },
    "required": ["task"],
    "additionalProperties": False,
}

_NEEDS_INPUT = {"invert", "wiener-invert", "scan", "factorize", "localize"}


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"config schema violation: {exc.message}") from None
    if cfg["task"] in _NEEDS_INPUT and "a" not in cfg.get("inputs", {}):
        raise SchemaError(f"task {cfg['task']} needs inputs.a")
    if cfg["task"] == "validate" and "instance" not in cfg:
        raise SchemaError("task validate needs an instance")
    return cfg


def _load_input(ref, base):
    """Return ``(document, provenance)`` for a path or an inline document."""
    if isinstance(ref, str):
        path = ref if os.path.isabs(ref) else os.path.join(base, ref)
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise SchemaError(f"cannot read input {ref!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise SchemaError(f"input {ref!r} is not valid JSON: {exc}") from None
        return doc, {"path": ref, "sha256": sha256_file(path)}
    blob = json.dumps(ref, sort_keys=True).encode()
    return ref, {"inline": True, "sha256": hashlib.sha256(blob).hexdigest()}


def _grades(alg, cfg):
    g = cfg.get("grades", {})
    alpha = alg.check_grade(g.get("alpha", alg.home_grade))
    beta = alg.check_grade(g["beta"]) if "beta" in g else alg.grades_above(alpha)[0]
    gamma = alg.check_grade(g["gamma"]) if "gamma" in g else alg.grades_above(beta)[0]
    return alpha, beta, gamma


def _task_validate(cfg, inputs):
    alg = instance_from_spec(cfg["instance"])
    alpha, beta, _ = _grades(alg, cfg)
    rep = validate_strong_inequality(alg, alpha, beta, cfg.get("samples", 100), cfg.get("seed", 0))
    return rep.to_dict(), rep.passed


def _task_invert(cfg, inputs):
    a = element_from_json(inputs["a"])
    alpha, beta, _ = _grades(a.algebra, cfg)
    res = calculus.neumann_inverse(a, alpha, beta, tol=cfg.get("tol"))
    one = res.inverse.one_like()
    checks = {
        "norm_inverse": res.inverse.norm(beta),
        "norm_distance": (one - res.inverse).norm(beta),
    }
    ok = checks["norm_inverse"] <= res.bound.bound and checks["norm_distance"] <= res.distance.bound
    out = {
        "inverse": res.inverse,
        "certificates": {"inverse": res.bound, "distance": res.distance},
        "checks": checks,
    }
    return out, bool(ok)


def _task_wiener_invert(cfg, inputs):
    a = wiener_from_json(inputs["a"])
    tol = cfg.get("tol", 1e-6)
    res = wiener.wiener_left_inverse(a, tol=tol, grid_size=cfg.get("grid_size"))
    out = {
        "inverse": res.inverse,
        "residual": res.residual,
        "patch_half_width": res.patch.half_width,
        "localizations": res.certificates,
        "local_errors": res.patch.local_errors,
        "scan_min_sigma": res.scan.min_sigma,
    }
    return out, res.residual <= tol


def _task_scan(cfg, inputs):
    a = wiener_from_json(inputs["a"])
    grid = cfg.get("grid_size", max(64, 4 * (2 * a.half_width + 1)))
    rep = wiener.wiener_invertibility_scan(a, grid)
    return rep.to_dict(), rep.all_invertible


def _task_factorize(cfg, inputs):
    a = wiener_from_json(inputs["a"])
    alpha, beta, _ = _grades(a.algebra, cfg)
    tol = cfg.get("tol", calculus.default_tol(a.algebra) * 100)
    res = factorization.solve_canonical_factorization(a, alpha, beta, tol=tol)
    ver = factorization.verify_factorization(a, res, cfg.get("grid_size", 256), tol=tol, grade=beta)
    out = {
        "factorization": res.to_dict(),
        "verification": ver.to_dict(),
        "a_minus": res.a_minus,
        "a_plus": res.a_plus,
        "a_minus_inv": res.a_minus_inv,
        "a_plus_inv": res.a_plus_inv,
    }
    return out, ver.passed


def _task_localize(cfg, inputs):
    a = wiener_from_json(inputs["a"])
    alpha, _, _ = _grades(a.algebra, cfg)
    t0 = float(cfg.get("t0", 0.0))
    li = calculus.left_inverse(wiener.evaluate(a, t0)).element
    b, cert = wiener.choose_localization(a, t0, li, alpha=alpha, tol=cfg.get("tol", 1e-8))
    return {"certificate": cert, "b0": cert.b0, "b0_left_inverse": cert.b0_left_inverse}, cert.contraction < 1


_DISPATCH = {
    "validate": _task_validate,
    "invert": _task_invert,
    "wiener-invert": _task_wiener_invert,
    "scan": _task_scan,
    "factorize": _task_factorize,
    "localize": _task_localize,
}


def run(cfg, base_dir=".", config_hash=None):
    """Run a validated config; returns ``(report, exit_code)``."""
    report = {"task": cfg["task"], "config_sha256": config_hash, "inputs": {}}
    if "instance" in cfg:
        report["instance"] = instance_spec(instance_from_spec(cfg["instance"]))
    try:
        docs = {}
        for name, ref in sorted(cfg.get("inputs", {}).items()):
            docs[name], report["inputs"][name] = _load_input(ref, base_dir)
        result, ok = _DISPATCH[cfg["task"]](cfg, docs)
        report["result"] = result
        report["verdict"] = "pass" if ok else "fail"
        code = 0 if ok else 3
    except StrongAlgebraError as exc:
        report["verdict"] = "error"
        report["error"] = {"class": type(exc).__name__, "message": str(exc)}
        code = exc.exit_code
    except (TypeError, ValueError, KeyError) as exc:
        report["verdict"] = "error"
        report["error"] = {"class": "SchemaError", "message": f"{type(exc).__name__}: {exc}"}
        code = SchemaError.exit_code
    report["exit_code"] = code
    return report, code


def build_parser():
    parser = argparse.ArgumentParser(prog="strongalg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="report path (default: config 'output' or stdout)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--tol", type=float, help="override the config tolerance")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if cfg["task"] != args.task:
            raise SchemaError(f"config task {cfg['task']!r} does not match subcommand {args.task!r}")
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tol is not None:
        cfg["tol"] = args.tol
    config_hash = hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()
    report, code = run(cfg, os.path.dirname(os.path.abspath(args.config)), config_hash)
    report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = dumps(report)
    out = args.out or cfg.get("output")
    try:
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return SchemaError.exit_code
    log.info("%s: %s (exit %d)", cfg["task"], report["verdict"], code)
    return code


if __name__ == "__main__":
    sys.exit(main())
