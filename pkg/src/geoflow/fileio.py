"""Matrix files and deterministic table output.

Matrix files
    JSON: ``{"n": 2, "data": [[1, 0], [0, 1]]}``.
    CSV:  first line ``n,<int>``, followed by ``n`` rows of ``n`` numbers.

Numbers are written in JSON with Python's shortest round-trip ``repr`` and in
CSV tables with 17 significant digits, so files reproduce bit-for-bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import GeoflowError


class MatrixFormatError(GeoflowError, ValueError):
    """A matrix file could not be parsed; the message names line and field."""


def _check_rows(rows, n, where):
    if len(rows) != n:
        raise MatrixFormatError(f"{where}: expected {n} rows, found {len(rows)}")
    for i, row in enumerate(rows):
        if len(row) != n:
            raise MatrixFormatError(f"{where}: row {i + 1} has {len(row)} fields, expected {n}")


def parse_matrix_json(text, source="<json>") -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict) or "n" not in obj or "data" not in obj:
        raise MatrixFormatError(f'{source}: expected an object with keys "n" and "data"')
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise MatrixFormatError(f'{source}: field "n" must be a positive integer, got {n!r}')
    rows = obj["data"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise MatrixFormatError(f'{source}: field "data" must be a list of rows')
    _check_rows(rows, n, source)
    out = np.empty((n, n))
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise MatrixFormatError(f"{source}: data[{i}][{j}] is not a finite number: {v!r}")
            out[i, j] = v
    return out


def parse_matrix_csv(text, source="<csv>") -> np.ndarray:
    lines = [ln for ln in text.splitlines()]
    if not lines:
        raise MatrixFormatError(f"{source}: empty file")
    head = [f.strip() for f in lines[0].split(",")]
    if len(head) != 2 or head[0] != "n":
        raise MatrixFormatError(f'{source}: line 1: expected header "n,<int>", got {lines[0]!r}')
    try:
        n = int(head[1])
    except ValueError:
        raise MatrixFormatError(f"{source}: line 1, field 2: {head[1]!r} is not an integer") from None
    if n < 1:
        raise MatrixFormatError(f"{source}: line 1: n must be positive")
    body = [(k + 2, ln) for k, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != n:
        raise MatrixFormatError(f"{source}: expected {n} data rows, found {len(body)}")
    out = np.empty((n, n))
    for i, (lineno, ln) in enumerate(body):
        fields = [f.strip() for f in ln.split(",")]
        if len(fields) != n:
            raise MatrixFormatError(f"{source}: line {lineno}: {len(fields)} fields, expected {n}")
        for j, f in enumerate(fields):
            try:
                v = float(f)
            except ValueError:
                raise MatrixFormatError(
                    f"{source}: line {lineno}, field {j + 1}: {f!r} is not a number") from None
            if not math.isfinite(v):
                raise MatrixFormatError(f"{source}: line {lineno}, field {j + 1}: non-finite value")
            out[i, j] = v
    return out


def read_matrix(path) -> np.ndarray:
    """Read a square matrix from a ``.json`` or ``.csv`` file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise MatrixFormatError(f"{p}: cannot read file ({exc.strerror})") from None
    if p.suffix.lower() == ".csv":
        return parse_matrix_csv(text, str(p))
    return parse_matrix_json(text, str(p))


def matrix_to_json(M) -> str:
    M = np.asarray(M, dtype=float)
    return json.dumps({"n": int(M.shape[0]), "data": [[float(v) for v in row] for row in M]})


def write_matrix_json(path, M) -> None:
    Path(path).write_text(matrix_to_json(M) + "\n")


def write_matrix_csv(path, M) -> None:
    M = np.asarray(M, dtype=float)
    lines = [f"n,{M.shape[0]}"] + [",".join(fmt17(v) for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def fmt17(x) -> str:
    """17-significant-digit scientific format (empty for NaN)."""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.16e}"


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt17(v) for v in row])


def to_jsonable(obj):
    """Convert arrays and numpy scalars; NaN/inf become ``None``."""
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
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
