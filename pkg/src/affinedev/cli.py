"""Command line entry point: ``affinedev <command> ...``.

Exit codes: 0 a result was produced, 1 the verdict is NotAffineEquivalent,
2 the input is invalid, 3 something went wrong inside.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .devmodel import (
    Development,
    build_correspondence,
    development_from_dict,
    parse_vertex_map,
    serialize_development,
    validate_development,
)
from .errors import AffineDevError, DevelopmentFormatError, InvalidParams
from .oracle import EmbeddedPolyhedron, GENERATORS, affine_pair, extract_development, generate, oracle_affine_equivalent
from .recognizer import RecognizerConfig, recognize, report_json, summary
from .solver import SolverConfig
from .suspension import suspension_certificate, suspension_structures
from .verdict import NOT_AFFINE

EXIT_OK, EXIT_NOT_AFFINE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None


def _is_polyhedron(doc):
    return isinstance(doc, dict) and isinstance(doc.get("vertices"), dict) and "gluings" not in doc


def load_input(path) -> Development:
    """A development file, or a polyhedron file that is flattened on the fly."""
    doc = _read_json(path)
    if _is_polyhedron(doc):
        return extract_development(EmbeddedPolyhedron.from_dict(doc))[0]
    return development_from_dict(doc)


def _checked(path, tol):
    dev = load_input(path)
    rep = validate_development(dev, tol) if tol is not None else validate_development(dev)
    if not rep.ok:
        raise InputError(f"{path}: development does not validate: " + "; ".join(i.message for i in rep))
    return dev


def _correspondence(dev, dev2, map_path):
    if map_path is None:
        vm = {v: v for v in dev.vertices}
    else:
        try:
            with open(map_path, encoding="utf-8") as fh:
                vm = parse_vertex_map(fh.read())
        except OSError as exc:
            raise InputError(f"{map_path}: {exc.strerror}") from None
    return build_correspondence(dev, dev2, vm)


def _solver_config(args):
    kw = {}
    if args.max_depth is not None:
        kw["max_depth"] = args.max_depth
    if args.tol is not None:
        kw["eps_width"] = args.tol
    return SolverConfig(**kw)


def _emit(text):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------

def cmd_validate(args):
    dev = load_input(args.path)
    rep = validate_development(dev, args.eps_len) if args.eps_len is not None else validate_development(dev)
    _emit(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_recognize(args):
    dev, dev2 = _checked(args.a, None), _checked(args.b, None)
    cmap = _correspondence(dev, dev2, args.map)
    cfg = RecognizerConfig(solver=_solver_config(args), symmetric=args.symmetric, jobs=args.jobs)
    verdict = recognize(dev, dev2, cmap, cfg)
    _emit(report_json(verdict, timings=args.timings) if args.json else summary(verdict))
    return EXIT_NOT_AFFINE if verdict.kind == NOT_AFFINE else EXIT_OK


def cmd_suspension(args):
    dev, dev2 = _checked(args.a, None), _checked(args.b, None)
    cmap = _correspondence(dev, dev2, args.map)
    cfg = _solver_config(args)
    structures = suspension_structures(dev) if args.all_pairings else [None]
    if args.all_pairings and not structures:
        structures = [None]  # let the certificate raise the proper error
    results = [suspension_certificate(dev, dev2, cmap, cfg, s) for s in structures]
    negative = any(v.kind == NOT_AFFINE for v in results)
    docs = []
    for v in results:
        d = {
            "verdict": v.kind,
            "alphaIntersection": v.alpha_intersection.to_list(),
            "certified": bool(v.alpha_intersection.certified),
        }
        d.update(v.detail)
        docs.append(d)
    doc = docs[0] if len(docs) == 1 else {"verdict": NOT_AFFINE if negative else docs[0]["verdict"], "pairings": docs}
    if args.json:
        _emit(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False))
    else:
        for d in docs:
            s = d["structure"]
            _emit(f"poles {s['southPole']}/{s['northPole']}: {d['verdict']} (solver: {d['solver']})")
    return EXIT_NOT_AFFINE if negative else EXIT_OK


def _param_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(items):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise InvalidParams(f"parameter {item!r} is not of the form key=value")
        out[key.replace("-", "_")] = _param_value(val)
    return out


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return path


def _write_poly(prefix, P):
    dev, _ = extract_development(P)
    return [
        _write(prefix + ".poly.json", P.dumps(indent=2)),
        _write(prefix + ".dev.json", serialize_development(dev, indent=2)),
    ]


def cmd_generate(args):
    params = _parse_params(args.param)
    if args.n is not None:
        params["n"] = args.n
    out = args.out
    if os.path.dirname(out):
        os.makedirs(os.path.dirname(out), exist_ok=True)
    if args.kind == "affinePair":
        base = params.pop("base", "cube")
        P, Q, A = affine_pair(base, params, seed=args.seed)
        written = _write_poly(out + ".A", P) + _write_poly(out + ".B", Q)
        written.append(_write(out + ".map.json", json.dumps({"vertexMap": {v: v for v in sorted(P.vertices)}}, indent=2, sort_keys=True)))
        written.append(_write(out + ".affine.json", json.dumps(_affine_doc(A), indent=2, sort_keys=True)))
    else:
        if args.kind == "randomConvexSuspension":
            params.setdefault("seed", args.seed)
        written = _write_poly(out, generate(args.kind, **params))
    for w in written:
        _emit(w)
    return EXIT_OK


def _affine_doc(A):
    return {
        "linear": np.asarray(A.linear).tolist(),
        "translation": np.asarray(A.translation).tolist(),
        "det": A.det,
    }


def cmd_oracle(args):
    P = EmbeddedPolyhedron.from_dict(_read_json(args.a))
    Q = EmbeddedPolyhedron.from_dict(_read_json(args.b))
    cmap = _correspondence(extract_development(P)[0], extract_development(Q)[0], args.map)
    A = oracle_affine_equivalent(P, Q, cmap, args.eps_aff)
    doc = {"affine": A is not None}
    if A is not None:
        doc.update(_affine_doc(A))
    _emit(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------

def _solver_flags(p):
    p.add_argument("--map", help="JSON file {\"vertexMap\": {id: id, ...}}; default matches equal ids")
    p.add_argument("--max-depth", type=int, help="subdivisions allowed per variable (default 40)")
    p.add_argument("--tol", type=float, help="relative box width at which subdivision stops (default 1e-6)")
    p.add_argument("--json", action="store_true", help="print the evidence document")


def build_parser():
    parser = argparse.ArgumentParser(prog="affinedev", description="Affine equivalence tests for polyhedra given by developments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a development file")
    p.add_argument("path")
    p.add_argument("--eps-len", type=float, help="relative length tolerance (default 1e-9)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("recognize", help="patch-by-patch non-equivalence test")
    p.add_argument("a")
    p.add_argument("b")
    _solver_flags(p)
    p.add_argument("--symmetric", action="store_true", help="also examine the patches of the second development")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for patch solves")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the document")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("suspension", help="certificate for bipyramid-like polyhedra")
    p.add_argument("a")
    p.add_argument("b")
    _solver_flags(p)
    p.add_argument("--all-pairings", action="store_true", help="run every pole pairing of the first development")
    p.set_defaults(func=cmd_suspension)

    p = sub.add_parser("generate", help="write a test polyhedron and its development")
    p.add_argument("kind", choices=sorted(GENERATORS) + ["affinePair"])
    p.add_argument("--n", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter, JSON value")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle", help="least-squares affine fit between two polyhedron files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--map")
    p.add_argument("--eps-aff", type=float, default=1e-9)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, AffineDevError, DevelopmentFormatError, InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - reported as an internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
