"""JSON matrix files and run reports.

A matrix file is ``{"n": int, "entries": [[[re, im], ...], ...], "label": str}``
with entries row-major. Numbers are parsed with :class:`decimal.Decimal` so the
decimal text is read exactly before rounding to double.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .matrix_core import HERMITIAN_RTOL, MAX_DIM, hermitian_defect


@dataclass
class MatrixFile:
    matrix: np.ndarray
    hermitian: bool
    label: str | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, Decimal)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ParseError(f"{where}: non-finite value {value!r}")
    return out


def parse_matrix(source: str | Path) -> MatrixFile:
    """Load a matrix from a path or from JSON text.

    Raises
    ------
    ParseError
        Malformed JSON (with line and column) or a field of the wrong shape or type.
    DimensionMismatch
        ``n`` outside ``1..64`` or rows that do not match ``n``.
    """
    text = None
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    else:
        stripped = source.lstrip()
        if stripped.startswith("{") or stripped.startswith("["):
            text = source
        else:
            try:
                text = Path(source).read_text(encoding="utf-8")
            except OSError as exc:
                raise ParseError(f"cannot read {source!r}: {exc}") from exc
    try:
        doc = json.loads(text, parse_float=Decimal, parse_int=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    if "n" not in doc or "entries" not in doc:
        raise ParseError("top level: fields 'n' and 'entries' are required")
    n = doc["n"]
    if not isinstance(n, Decimal) or n != n.to_integral_value():
        raise ParseError(f"field 'n': expected an integer, got {n!r}")
    n = int(n)
    if not 1 <= n <= MAX_DIM:
        raise DimensionMismatch(f"field 'n': {n} outside 1..{MAX_DIM}")
    rows = doc["entries"]
    if not isinstance(rows, list) or len(rows) != n:
        raise DimensionMismatch(f"field 'entries': expected {n} rows")
    M = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise DimensionMismatch(f"entries[{i}]: expected {n} entries")
        for j, cell in enumerate(row):
            where = f"entries[{i}][{j}]"
            if not isinstance(cell, list) or len(cell) != 2:
                raise ParseError(f"{where}: expected [re, im]")
            M[i, j] = complex(_number(cell[0], where + "[0]"), _number(cell[1], where + "[1]"))
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise ParseError("field 'label': expected a string")
    return MatrixFile(M, hermitian_defect(M) <= HERMITIAN_RTOL, label)


def matrix_to_json(M, label: str | None = None) -> str:
    M = np.asarray(M, dtype=complex)
    doc = {
        "n": int(M.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in M],
    }
    if label is not None:
        doc["label"] = label
    return json.dumps(doc)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays, complex numbers and fractions."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if hasattr(obj, "numerator") and hasattr(obj, "denominator") and not isinstance(obj, int):
        return str(obj)
    return obj
