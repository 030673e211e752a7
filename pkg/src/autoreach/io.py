"""JSON file formats for systems, specifications and results.

Matrices are objects ``{"rows": [[...], ...]}`` (row-major); zonotope
generators are ``{"columns": [[...], ...]}`` (one list per generator).
Floats are written with Python's shortest round-trip representation;
non-finite values are written as the strings ``"inf"``, ``"-inf"``, ``"nan"``.
Writes go to a temporary file that is renamed into place.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from typing import Any

import numpy as np

from .reach import LinearSystem, StepRecord
from .sets import Polytope, Zonotope
from .verify import SpecSet, Specification

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """A file does not follow the expected structure; the message names the field."""


# ---------------------------------------------------------------------------
# primitives


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _from_num(x, name: str) -> float:
    if isinstance(x, bool):
        raise FormatError(f"{name}: expected a number")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str) and x in ("inf", "-inf", "nan"):
        return float(x)
    raise FormatError(f"{name}: expected a number, got {x!r}")


def to_jsonable(obj: Any):
    """Plain JSON structure of numbers, arrays and nested containers."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return {"rows": [[_num(v) for v in row] for row in M], "shape": list(M.shape)}


def matrix_from_json(obj, name: str) -> np.ndarray:
    if not isinstance(obj, dict) or "rows" not in obj:
        raise FormatError(f"{name}: expected an object with a 'rows' key")
    rows = obj["rows"]
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise FormatError(f"{name}: 'rows' must be a list of lists")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise FormatError(f"{name}: rows have different lengths")
    shape = obj.get("shape")
    width = widths.pop() if widths else (shape[1] if shape else 0)
    M = np.array([[_from_num(v, name) for v in r] for r in rows], dtype=float).reshape(len(rows), width)
    if shape is not None and list(M.shape) != list(shape):
        raise FormatError(f"{name}: shape {list(M.shape)} differs from declared {shape}")
    return M


def vector_from_json(obj, name: str) -> np.ndarray:
    if not isinstance(obj, list):
        raise FormatError(f"{name}: expected a list of numbers")
    return np.array([_from_num(v, name) for v in obj], dtype=float)


def zonotope_to_json(Z: Zonotope) -> dict:
    return {"center": [_num(v) for v in Z.center], "generators": {"columns": [[_num(v) for v in col] for col in Z.generators.T]}}


def zonotope_from_json(obj, name: str) -> Zonotope:
    if not isinstance(obj, dict) or "center" not in obj:
        raise FormatError(f"{name}: expected an object with 'center'")
    c = vector_from_json(obj["center"], f"{name}.center")
    gens = obj.get("generators", {"columns": []})
    if isinstance(gens, dict) and "columns" in gens:
        cols = gens["columns"]
        if not isinstance(cols, list):
            raise FormatError(f"{name}.generators: 'columns' must be a list")
        G = np.array([vector_from_json(col, f"{name}.generators") for col in cols], dtype=float).reshape(len(cols), c.size).T \
            if cols else np.zeros((c.size, 0))
    elif isinstance(gens, dict) and "rows" in gens:
        G = matrix_from_json(gens, f"{name}.generators")
        if G.size == 0:
            G = np.zeros((c.size, 0))
    else:
        raise FormatError(f"{name}.generators: expected 'columns' or 'rows'")
    if G.shape[0] != c.size:
        raise FormatError(f"{name}.generators: {G.shape[0]} rows, centre has {c.size} entries")
    return Zonotope(c, G)


def write_json_atomic(path: str, data, indent: int | None = 1) -> None:
    """Write ``data`` as JSON via a temporary file in the target directory and an atomic rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            if indent is None:
                json.dump(to_jsonable(data), fh, separators=(",", ":"), allow_nan=False)
            else:
                json.dump(to_jsonable(data), fh, indent=indent, allow_nan=False)
            fh.write("\n")
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# systems


def system_to_json(sys: LinearSystem) -> dict:
    return {
        "schema": "autoreach.system",
        "version": SCHEMA_VERSION,
        "A": matrix_to_json(sys.A),
        "B": matrix_to_json(sys.B),
        "p": [_num(v) for v in sys.p],
        "C": matrix_to_json(sys.C),
        "W": matrix_to_json(sys.W),
        "q": [_num(v) for v in sys.q],
        "X0": zonotope_to_json(sys.X0),
        "U": zonotope_to_json(sys.U),
        "V": zonotope_to_json(sys.V),
        "tFinal": _num(sys.tFinal),
    }


def system_from_json(obj) -> LinearSystem:
    if not isinstance(obj, dict):
        raise FormatError("system: expected a JSON object")
    for key in ("A", "X0", "tFinal"):
        if key not in obj:
            raise FormatError(f"system: missing field '{key}'")
    kw = {"A": matrix_from_json(obj["A"], "A"), "X0": zonotope_from_json(obj["X0"], "X0"),
          "tFinal": _from_num(obj["tFinal"], "tFinal")}
    for key in ("B", "C", "W"):
        if key in obj:
            kw[key] = matrix_from_json(obj[key], key)
    for key in ("p", "q"):
        if key in obj:
            kw[key] = vector_from_json(obj[key], key)
    for key in ("U", "V"):
        if key in obj:
            kw[key] = zonotope_from_json(obj[key], key)
    try:
        return LinearSystem(**kw)
    except ValueError as exc:
        raise FormatError(f"system: {exc}") from exc


def save_system(path: str, sys: LinearSystem) -> None:
    write_json_atomic(path, system_to_json(sys))


def load_system(path: str) -> LinearSystem:
    return system_from_json(read_json(path))


# ---------------------------------------------------------------------------
# specifications


def _specset_to_json(s: SpecSet) -> dict:
    out = {"C": matrix_to_json(s.polytope.C), "d": [_num(v) for v in s.polytope.d]}
    if s.window is not None:
        out["window"] = [_num(v) for v in s.window]
    return out


def _specset_from_json(obj, name: str) -> SpecSet:
    if not isinstance(obj, dict) or "C" not in obj or "d" not in obj:
        raise FormatError(f"{name}: expected an object with 'C' and 'd'")
    C = matrix_from_json(obj["C"], f"{name}.C")
    d = vector_from_json(obj["d"], f"{name}.d")
    window = None
    if obj.get("window") is not None:
        w = vector_from_json(obj["window"], f"{name}.window")
        if w.size != 2:
            raise FormatError(f"{name}.window: expected [a, b]")
        window = (float(w[0]), float(w[1]))
    try:
        return SpecSet(Polytope(C, d), window)
    except ValueError as exc:
        raise FormatError(f"{name}: {exc}") from exc


def spec_to_json(spec: Specification) -> dict:
    return {
        "schema": "autoreach.spec",
        "version": SCHEMA_VERSION,
        "safe": [_specset_to_json(s) for s in spec.safe],
        "unsafe": [_specset_to_json(s) for s in spec.unsafe],
    }


def spec_from_json(obj, t_final: float | None = None) -> Specification:
    if not isinstance(obj, dict):
        raise FormatError("spec: expected a JSON object")
    safe = [_specset_from_json(o, f"safe[{j}]") for j, o in enumerate(obj.get("safe", []))]
    unsafe = [_specset_from_json(o, f"unsafe[{j}]") for j, o in enumerate(obj.get("unsafe", []))]
    try:
        spec = Specification(safe, unsafe)
        if t_final is not None:
            spec.check_horizon(t_final)
    except ValueError as exc:
        raise FormatError(f"spec: {exc}") from exc
    return spec


def save_spec(path: str, spec: Specification) -> None:
    write_json_atomic(path, spec_to_json(spec))


def load_spec(path: str, t_final: float | None = None) -> Specification:
    return spec_from_json(read_json(path), t_final)


# ---------------------------------------------------------------------------
# results

STEP_FIELDS = [f.name for f in dataclasses.fields(StepRecord)]


def step_to_json(s: StepRecord) -> dict:
    return {name: to_jsonable(getattr(s, name)) for name in STEP_FIELDS}


def step_from_json(obj) -> StepRecord:
    kw = {}
    for f in dataclasses.fields(StepRecord):
        if f.name not in obj:
            if f.default is not dataclasses.MISSING:
                continue
            raise FormatError(f"step record: missing field '{f.name}'")
        v = obj[f.name]
        kw[f.name] = int(v) if f.name in ("k", "eta", "candidates") else _from_num(v, f.name)
    return StepRecord(**kw)


def result_document(command: str, **fields) -> dict:
    """Result file content: ``schema``, ``version`` and ``command`` first, then ``fields`` in order."""
    doc = {"schema": "autoreach.result", "version": SCHEMA_VERSION, "command": command}
    for k, v in fields.items():
        if k == "steps":
            v = [step_to_json(s) if isinstance(s, StepRecord) else s for s in v]
        doc[k] = v
    return to_jsonable(doc)


def save_result(path: str, doc: dict) -> None:
    """Results can be large, so they are written without indentation."""
    write_json_atomic(path, doc, indent=None)


def load_result(path: str) -> dict:
    doc = read_json(path)
    if not isinstance(doc, dict) or doc.get("schema") != "autoreach.result":
        raise FormatError(f"{path}: not a result file")
    if doc.get("version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')!r}")
    if "steps" in doc:
        doc["steps"] = [step_from_json(s) for s in doc["steps"]]
    return doc
