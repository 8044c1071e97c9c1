"""JSON file formats and report serialization.

Matrix file::

    {"rows": 2, "cols": 2, "data": [[[re, im], [re, im]], [[re, im], [re, im]]]}

State-set file (one entry per state, each of length ``dim``)::

    {"dim": 2, "states": [[[re, im], [re, im]], ...], "priors": [0.5, 0.5]}

Either file is accepted wherever a matrix or a state set is expected; a
state set is read as the matrix whose columns are the states.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .usd import StateSet

SIGNIFICANT_DIGITS = 12
PRIORS_FILE_TOL = 1e-9


def _complex(entry, where: str) -> complex:
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        z = complex(entry)
    elif (isinstance(entry, (list, tuple)) and len(entry) == 2
          and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
        z = complex(entry[0], entry[1])
    else:
        raise ParseError(f"{where}: expected [re, im], got {entry!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParseError(f"{where}: non-finite number")
    return z


def _int_field(doc: dict, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise ParseError(f"field {key!r} must be a positive integer")
    return v


def matrix_from_json(doc) -> np.ndarray:
    if not isinstance(doc, dict):
        raise ParseError("matrix document must be a JSON object")
    if "states" in doc:
        return states_from_json(doc).states
    rows, cols = _int_field(doc, "rows"), _int_field(doc, "cols")
    data = doc.get("data")
    if not isinstance(data, list) or len(data) != rows:
        raise ParseError(f"'data' must have {rows} rows")
    out = np.empty((rows, cols), dtype=complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise ParseError(f"row {i} must have {cols} entries")
        for j, entry in enumerate(row):
            out[i, j] = _complex(entry, f"data[{i}][{j}]")
    return out


def states_from_json(doc) -> StateSet:
    if not isinstance(doc, dict):
        raise ParseError("state-set document must be a JSON object")
    if "states" not in doc:
        return StateSet(matrix_from_json(doc))
    dim = _int_field(doc, "dim")
    states = doc["states"]
    if not isinstance(states, list) or not states:
        raise ParseError("'states' must be a non-empty list")
    cols = []
    for i, st in enumerate(states):
        if not isinstance(st, list) or len(st) != dim:
            raise ParseError(f"state {i} must have {dim} entries")
        cols.append([_complex(x, f"states[{i}][{k}]") for k, x in enumerate(st)])
    priors = doc.get("priors")
    if priors is not None:
        if not isinstance(priors, list) or len(priors) != len(states):
            raise ParseError("'priors' must list one probability per state")
        p = np.array([_complex(x, f"priors[{i}]").real for i, x in enumerate(priors)])
        if abs(p.sum() - 1.0) > PRIORS_FILE_TOL:
            raise ParseError("priors must sum to 1")
        priors = p / p.sum()
    return StateSet(np.array(cols, dtype=complex).T, priors)


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(read_json(path))


def load_states(path) -> StateSet:
    return states_from_json(read_json(path))


def fmt(x: float):
    """Round to 12 significant digits; non-finite values become null."""
    x = float(x)
    if not math.isfinite(x):
        return None
    v = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if v == 0.0 else v


def cfmt(z: complex):
    return [fmt(z.real), fmt(z.imag)]


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return {"rows": a.shape[0], "cols": a.shape[1], "data": [[cfmt(z) for z in row] for row in a]}


def states_to_json(st: StateSet) -> dict:
    doc = {"dim": st.dim, "states": [[cfmt(z) for z in st.states[:, i]] for i in range(len(st))]}
    if st.priors is not None:
        doc["priors"] = [fmt(p) for p in st.priors]
    return doc


def vector_to_json(v) -> list:
    return [cfmt(z) for z in np.asarray(v, dtype=complex).ravel()]


def jsonable(obj):
    """Recursively convert report values; complex matrices become matrix documents."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, StateSet):
        return states_to_json(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return matrix_to_json(obj) if obj.ndim == 2 else vector_to_json(obj)
        if obj.dtype == bool:
            return obj.tolist()
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, complex):
        return cfmt(obj)
    return obj


def dumps(report) -> str:
    """Deterministic JSON: one top-level key per line, compact values."""
    doc = jsonable(report)
    if not isinstance(doc, dict):
        return json.dumps(doc, sort_keys=True) + "\n"
    body = ",\n".join(f"  {json.dumps(k)}: {json.dumps(doc[k], sort_keys=True)}" for k in sorted(doc))
    return "{\n" + body + "\n}\n"


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))
