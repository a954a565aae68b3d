"""JSON instance format.

Dense row-major matrices, finite doubles only, validated against a JSON
schema on load.  ``format_version`` is reserved for a future sparse
encoding.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .model import FirstStageSet, TwoStageInstance, UncertaintyPolytope

FORMAT_VERSION = 1

_vec = {"type": "array", "items": {"type": "number"}}
_mat = {"type": "array", "items": _vec}

SCHEMA = {
    "type": "object",
    "required": ["n", "m", "r", "l", "a", "b", "c", "A", "B", "C", "D", "d_rhs", "X"],
    "properties": {
        "format_version": {"type": "integer", "enum": [FORMAT_VERSION]},
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "r": {"type": "integer", "minimum": 1},
        "l": {"type": "integer", "minimum": 1},
        "a": _vec, "b": _vec, "c": _vec,
        "A": _mat, "B": _mat, "C": _mat, "D": _mat, "d_rhs": _vec,
        "X": {
            "type": "object",
            "required": ["lb", "ub", "integer_flags"],
            "properties": {
                "lb": _vec,
                "ub": _vec,
                "integer_flags": {"type": "array", "items": {"type": "boolean"}},
                "constraints": {
                    "type": "object",
                    "required": ["G", "h", "senses"],
                    "properties": {
                        "G": _mat, "h": _vec,
                        "senses": {"type": "array", "items": {"enum": ["<=", ">=", "=="]}},
                    },
                },
            },
        },
        "meta": {"type": "object"},
    },
}


class InstanceFormatError(ValueError):
    pass


def _mat_list(M: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.atleast_2d(M)]


def instance_to_dict(inst: TwoStageInstance) -> dict:
    X = inst.X
    out = {
        "format_version": FORMAT_VERSION,
        "n": inst.n, "m": inst.m, "r": inst.r, "l": inst.l,
        "a": inst.a.tolist(), "b": inst.b.tolist(), "c": inst.c.tolist(),
        "A": _mat_list(inst.A), "B": _mat_list(inst.B), "C": _mat_list(inst.C),
        "D": _mat_list(inst.U.D), "d_rhs": inst.U.d_rhs.tolist(),
        "X": {"lb": X.lb.tolist(), "ub": X.ub.tolist(), "integer_flags": [bool(v) for v in X.integer]},
        "meta": dict(inst.meta),
    }
    if X.G.shape[0]:
        out["X"]["constraints"] = {"G": _mat_list(X.G), "h": X.h.tolist(), "senses": list(X.senses)}
    return out


def _matrix(rows, nrows: int, ncols: int, name: str) -> np.ndarray:
    M = np.array(rows, dtype=float) if rows else np.zeros((0, ncols))
    if M.size == 0:
        M = M.reshape(nrows, ncols) if nrows * ncols == 0 else M
    if M.shape != (nrows, ncols):
        raise InstanceFormatError(f"{name} has shape {M.shape}, expected {(nrows, ncols)}")
    return M


def instance_from_dict(doc: dict) -> TwoStageInstance:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InstanceFormatError(f"instance does not match the schema at {path}: {e.message}") from None
    n, m, r, l = doc["n"], doc["m"], doc["r"], doc["l"]
    D = np.array(doc["D"], float)
    if D.ndim != 2 or D.shape[1] != l:
        raise InstanceFormatError(f"D has shape {D.shape}, expected (*, {l})")
    Xd = doc["X"]
    cons = Xd.get("constraints")
    X = FirstStageSet(
        lb=np.array(Xd["lb"], float), ub=np.array(Xd["ub"], float),
        integer=np.array(Xd["integer_flags"], bool),
        G=None if cons is None else _matrix(cons["G"], len(cons["h"]), n, "X.G"),
        h=None if cons is None else np.array(cons["h"], float),
        senses=() if cons is None else tuple(cons["senses"]),
    )
    inst = TwoStageInstance(
        a=np.array(doc["a"], float), b=np.array(doc["b"], float),
        A=_matrix(doc["A"], r, n, "A"), B=_matrix(doc["B"], r, m, "B"), C=_matrix(doc["C"], r, l, "C"),
        c=np.array(doc["c"], float), X=X,
        U=UncertaintyPolytope(D=D, d_rhs=np.array(doc["d_rhs"], float)),
        meta=dict(doc.get("meta", {})),
    )
    for name, vec, size in (("a", inst.a, n), ("b", inst.b, m), ("c", inst.c, r), ("d_rhs", inst.U.d_rhs, D.shape[0])):
        if vec.shape[0] != size:
            raise InstanceFormatError(f"{name} has length {vec.shape[0]}, expected {size}")
    return inst


def save_instance(inst: TwoStageInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_instance(path) -> TwoStageInstance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: not valid JSON ({e})") from None
    return instance_from_dict(doc)


def load_x(path) -> np.ndarray:
    """First-stage vector from ``{"x": [...]}``, a bare JSON list, or a run report."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = doc.get("x")
    if not isinstance(doc, list) or not all(isinstance(v, (int, float)) for v in doc):
        raise InstanceFormatError(f"{path}: expected a list of numbers or an object with key 'x'")
    return np.array(doc, float)
