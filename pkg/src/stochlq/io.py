"""JSON problem files, result files and CSV export."""
from __future__ import annotations

import csv
import io
import json
from typing import Any

import jsonschema
import numpy as np

from .errors import InvalidSpec
from .filtration import build_tree
from .model import ALL_FIELDS, TERMINAL_FIELDS, ControlPair, Dims, GameSpec, make_spec

_NUMBER_ARRAY = {"type": ["number", "array"]}

_COEFFICIENT = {
    "oneOf": [
        {"type": "object", "properties": {"constant": _NUMBER_ARRAY}, "required": ["constant"], "additionalProperties": False},
        {"type": "object", "properties": {"per_level": {"type": "array"}}, "required": ["per_level"], "additionalProperties": False},
        {"type": "object", "properties": {"per_node": {"type": "object", "additionalProperties": _NUMBER_ARRAY}},
         "required": ["per_node"], "additionalProperties": False},
    ]
}

_BRANCHES = {
    "type": "array",
    "minItems": 2,
    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
}

PROBLEM_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "dims": {
            "type": "object",
            "properties": {k: {"type": "integer", "minimum": 1} for k in ("n", "m", "l", "N")},
            "required": ["n", "m", "l", "N"],
            "additionalProperties": False,
        },
        "tree": {
            "oneOf": [
                {"type": "object", "properties": {"preset": {"type": "string"}}, "required": ["preset"], "additionalProperties": False},
                {"type": "object", "properties": {"branches": _BRANCHES}, "required": ["branches"], "additionalProperties": False},
                {"type": "object",
                 "properties": {"levels": {"type": "array", "items": {"oneOf": [{"type": "string"}, _BRANCHES]}}},
                 "required": ["levels"], "additionalProperties": False},
            ]
        },
        "coefficients": {
            "type": "object",
            "properties": {name: _COEFFICIENT for name in ALL_FIELDS},
            "additionalProperties": False,
        },
        "xi": {"type": "array", "items": {"type": "number"}},
        "options": {
            "type": "object",
            "properties": {
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "rcond_min": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "oracle_tol": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["dims", "tree", "coefficients", "xi"],
    "additionalProperties": False,
}

CONTROLS_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "u": {"type": "object", "additionalProperties": {"type": "array"}},
        "v": {"type": "object", "additionalProperties": {"type": "array"}},
    },
    "required": ["u", "v"],
}

DEFAULT_OPTIONS = {"delta": 1e-8, "rcond_min": 1e-10, "tol": 1e-8, "oracle_tol": 1e-6, "seed": 0}


def _tree_from(doc: dict, N: int):
    t = doc["tree"]
    if "preset" in t:
        return build_tree(N, t["preset"])
    if "branches" in t:
        return build_tree(N, [tuple(b) for b in t["branches"]])
    return build_tree(N, [lv if isinstance(lv, str) else [tuple(b) for b in lv] for lv in t["levels"]])


def _coefficient(tree, dims: Dims, name: str, entry: dict):
    shape = dims.node_shapes()[name]
    if "constant" in entry:
        return np.asarray(entry["constant"], dtype=float)
    if "per_level" in entry:
        return [np.asarray(a, dtype=float) for a in entry["per_level"]]
    mapping = entry["per_node"]
    levels = [dims.N] if name in TERMINAL_FIELDS else list(range(dims.N))
    out = []
    for k in levels:
        keys = tree.keys(k)
        missing = [key for key in keys if key not in mapping]
        if missing:
            raise InvalidSpec(f"{name}: no value for node(s) {missing[:3]} at level {k}")
        out.append(np.stack([np.asarray(mapping[key], dtype=float).reshape(shape) for key in keys]))
    known = {key for k in levels for key in tree.keys(k)}
    extra = sorted(set(mapping) - known)
    if extra:
        raise InvalidSpec(f"{name}: unexpected node keys {extra[:3]}")
    return out[0] if name in TERMINAL_FIELDS else out


def parse_problem(doc: Any) -> tuple[GameSpec, dict]:
    """Validate a problem document against the schema and build the spec and options."""
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidSpec(f"schema violation at {where}: {exc.message}") from None
    d = doc["dims"]
    dims = Dims(d["n"], d["m"], d["l"], d["N"])
    tree = _tree_from(doc, dims.N)
    coefs = {name: _coefficient(tree, dims, name, entry) for name, entry in doc["coefficients"].items()}
    try:
        spec = make_spec(tree, dims, xi=doc["xi"], **coefs)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from None
    options = {**DEFAULT_OPTIONS, **doc.get("options", {})}
    return spec, options


def load_problem(path: str) -> tuple[GameSpec, dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"{path}: invalid JSON ({exc})") from None
    return parse_problem(doc)


def _node_map(tree, levels, first_level: int = 0) -> dict[str, Any]:
    out = {}
    for k, arr in enumerate(levels, start=first_level):
        for key, val in zip(tree.keys(k), arr):
            out[key] = np.asarray(val).tolist()
    return out


def problem_document(spec: GameSpec, tree_doc: dict, options: dict | None = None) -> dict:
    """Serialize a spec with every coefficient given per node."""
    coefficients = {}
    for name in ALL_FIELDS:
        if name in TERMINAL_FIELDS:
            coefficients[name] = {"per_node": _node_map(spec.tree, [spec[name]], spec.dims.N)}
        else:
            coefficients[name] = {"per_node": _node_map(spec.tree, spec[name])}
    doc = {
        "dims": {"n": spec.dims.n, "m": spec.dims.m, "l": spec.dims.l, "N": spec.dims.N},
        "tree": tree_doc,
        "coefficients": coefficients,
        "xi": spec.xi.tolist(),
    }
    if options:
        doc["options"] = options
    return doc


def controls_document(spec: GameSpec, controls: ControlPair) -> dict:
    return {"u": _node_map(spec.tree, controls.u), "v": _node_map(spec.tree, controls.v)}


def parse_controls(spec: GameSpec, doc: Any) -> ControlPair:
    """Read a control pair from a controls document or a result document."""
    if isinstance(doc, dict) and "trajectory" in doc:
        doc = {"u": doc["trajectory"]["u"], "v": doc["trajectory"]["v"]}
    try:
        jsonschema.validate(doc, CONTROLS_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvalidSpec(f"controls: {exc.message}") from None
    out = []
    for name, width in (("u", spec.dims.m), ("v", spec.dims.l)):
        levels = []
        for k in range(spec.dims.N):
            keys = spec.tree.keys(k)
            missing = [key for key in keys if key not in doc[name]]
            if missing:
                raise InvalidSpec(f"controls: {name} missing node(s) {missing[:3]} at level {k}")
            levels.append(np.stack([np.asarray(doc[name][key], dtype=float).reshape(width) for key in keys]))
        out.append(tuple(levels))
    return ControlPair(*out)


def result_document(spec: GameSpec, sol, traj, costs: dict, report=None) -> dict:
    tree = spec.tree
    doc = {
        "status": "ok",
        "dims": {"n": spec.dims.n, "m": spec.dims.m, "l": spec.dims.l, "N": spec.dims.N},
        "riccati": {
            "T": _node_map(tree, sol.T),
            "phi": _node_map(tree, sol.phi),
            "Pi": _node_map(tree, sol.Pi),
            "Sigma": _node_map(tree, sol.Sigma),
        },
        "trajectory": {
            "x": _node_map(tree, traj.x),
            "u": _node_map(tree, traj.controls.u),
            "v": _node_map(tree, traj.controls.v),
            "y1": _node_map(tree, traj.y1),
            "y2": _node_map(tree, traj.y2),
        },
        "costs": {"J1": costs["J1"], "J2": costs["J2"]},
        # at the equilibrium each value equals that player's cost from (0, xi)
        "values": {"V1": costs["J1"], "V2": costs["J2"]},
        "diagnostics": {
            "rcond": _node_map(tree, sol.rcond),
            "gain_residual": _node_map(tree, sol.gain_residual),
            "min_rcond": float(min(r.min() for r in sol.rcond)),
        },
    }
    doc["certification"] = report.as_dict() if report is not None else None
    return doc


def result_csv(spec: GameSpec, sol, traj) -> str:
    """One row per node: level, path, state, controls and rcond (empty at the leaves)."""
    n, m, l, N = spec.dims.n, spec.dims.m, spec.dims.l, spec.dims.N
    header = (["level", "path"] + [f"x{i}" for i in range(n)] + [f"u{i}" for i in range(m)]
              + [f"v{i}" for i in range(l)] + ["rcond"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for k in range(N + 1):
        for i, key in enumerate(spec.tree.keys(k)):
            row = [k, key] + [repr(float(a)) for a in traj.x[k][i]]
            if k < N:
                row += [repr(float(a)) for a in traj.controls.u[k][i]]
                row += [repr(float(a)) for a in traj.controls.v[k][i]]
                row.append(repr(float(sol.rcond[k][i])))
            else:
                row += [""] * (m + l + 1)
            writer.writerow(row)
    return buf.getvalue()


def _finite(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps(doc: Any) -> str:
    """JSON text with non-finite numbers written as null.

    Python's float repr is the shortest string that round-trips the double exactly.
    """
    return json.dumps(_finite(doc), indent=2, allow_nan=False)
