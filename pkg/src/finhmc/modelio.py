"""JSON model files and CSV observation files.

Model document::

    {"type": "hmc", "n": 2, "m": 2, "column_stochastic": true,
     "A": [["1/2", "1/4"], ["1/2", "3/4"]],
     "G": [["3/4", "1/4"], ["1/4", "3/4"]],
     "p0": ["1/2", "1/2"]}

``sigma_p`` documents carry ``"blocks"`` (list of ``n x n`` matrices) and
``"q0"`` (length ``n*m``); ``sigma_s`` documents carry ``"blocks"`` and
``"p0"``. Matrices are row-major nested arrays in the column-stochastic
convention. Entries are strings (``"3/4"``, ``"0.25"``) or integers and are
parsed exactly. ``column_stochastic`` may be omitted but must not be false.

Observation files are CSV with header ``t,y``; ``y`` is 1-based on disk and
0-based in memory.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kronlab as kl
from .models import HmcModel, ModelError, SigmaPModel, SigmaSModel

__all__ = [
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "dump_model",
    "read_obs",
    "format_obs",
    "matrix_to_json",
    "vector_to_json",
]


def _scalar(v, where: str) -> Fraction:
    if isinstance(v, bool):
        raise ModelError(f"{where}: expected a number, got {v!r}", where)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(repr(v))
    if isinstance(v, str):
        try:
            return kl.parse_scalar(v)
        except ValueError:
            raise ModelError(f"{where}: not a rational number: {v!r}", where) from None
    raise ModelError(f"{where}: expected a number string, got {type(v).__name__}", where)


def _vector(v, name: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ModelError(f"{name}: expected a nonempty array", name)
    return kl.as_exact([_scalar(x, f"{name}[{i}]") for i, x in enumerate(v)])


def _matrix(v, name: str) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ModelError(f"{name}: expected a nonempty array of rows", name)
    width = len(v[0])
    for i, row in enumerate(v):
        if len(row) != width:
            raise ModelError(f"{name}[{i}]: row length {len(row)} != {width}", name, (i,))
    return kl.as_exact([[_scalar(x, f"{name}[{i}][{j}]") for j, x in enumerate(row)]
                        for i, row in enumerate(v)])


def _require(doc: dict, key: str):
    if key not in doc:
        raise ModelError(f"missing field {key!r}", key)
    return doc[key]


def _check_dims(doc: dict, n: int, m: int) -> None:
    for key, val in (("n", n), ("m", m)):
        if key in doc and doc[key] != val:
            raise ModelError(f"{key}: declared {doc[key]} but matrices imply {val}", key)


def model_from_dict(doc: dict):
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    if doc.get("column_stochastic", True) is not True:
        raise ModelError("column_stochastic must be true: kernels are stored with "
                         "entry (i, j) = P(next = i | current = j)", "column_stochastic")
    kind = _require(doc, "type")
    if kind == "hmc":
        model = HmcModel(_matrix(_require(doc, "A"), "A"), _matrix(_require(doc, "G"), "G"),
                         _vector(_require(doc, "p0"), "p0"))
    elif kind in ("sigma_p", "sigma_s"):
        raw = _require(doc, "blocks")
        if not isinstance(raw, list) or not raw:
            raise ModelError("blocks: expected a nonempty array of matrices", "blocks")
        blocks = tuple(_matrix(b, f"blocks[{i}]") for i, b in enumerate(raw))
        if kind == "sigma_p":
            model = SigmaPModel(blocks, _vector(_require(doc, "q0"), "q0"))
        else:
            model = SigmaSModel(blocks, _vector(_require(doc, "p0"), "p0"))
    else:
        raise ModelError(f"type: unknown model type {kind!r}", "type")
    _check_dims(doc, model.n, model.m)
    return model


def matrix_to_json(a: np.ndarray) -> list:
    return [[kl.format_scalar(v) for v in row] for row in a]


def vector_to_json(v: np.ndarray) -> list:
    return [kl.format_scalar(x) for x in v]


def model_to_dict(model) -> dict:
    base = {"n": model.n, "m": model.m, "column_stochastic": True}
    if isinstance(model, HmcModel):
        return {"type": "hmc", **base, "A": matrix_to_json(model.A),
                "G": matrix_to_json(model.G), "p0": vector_to_json(model.p0)}
    blocks = [matrix_to_json(b) for b in model.blocks]
    if isinstance(model, SigmaPModel):
        return {"type": "sigma_p", **base, "blocks": blocks, "q0": vector_to_json(model.q0)}
    if isinstance(model, SigmaSModel):
        return {"type": "sigma_s", **base, "blocks": blocks, "p0": vector_to_json(model.p0)}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def load_model(path) -> object:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from None
    return model_from_dict(doc)


def dump_model(model, path=None) -> str:
    text = json.dumps(model_to_dict(model), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def read_obs(path_or_text, m: int | None = None, from_text: bool = False) -> list[int]:
    """Read an observation CSV; returns 0-based output indices."""
    text = path_or_text if from_text else Path(path_or_text).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t", "y"]:
        raise ValueError("observation file must start with header 't,y'")
    ys = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ValueError(f"line {line}: expected 2 columns, got {len(row)}")
        try:
            t, y = int(row[0]), int(row[1])
        except ValueError:
            raise ValueError(f"line {line}: t and y must be integers") from None
        if t != len(ys):
            raise ValueError(f"line {line}: expected t={len(ys)}, got t={t}")
        if y < 1 or (m is not None and y > m):
            raise ValueError(f"line {line}: y={y} out of range 1..{m if m else 'm'}")
        ys.append(y - 1)
    if not ys:
        raise ValueError("observation file has no rows")
    return ys


def format_obs(ys) -> str:
    lines = ["t,y"] + [f"{t},{y + 1}" for t, y in enumerate(ys)]
    return "\n".join(lines) + "\n"
