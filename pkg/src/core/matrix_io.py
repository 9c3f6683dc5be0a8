"""
Matrix files.

SPMX: 16-byte header (magic ``b"SPMX"``, u32 rows, u32 cols, 4 zero bytes) followed by
little-endian float64 values in row-major order. CSV: one header row, ``repr`` floats.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from core.errors import ParseError

SPMX_MAGIC = b"SPMX"
_HEADER = struct.Struct("<4sII4x")


def write_spmx(matrix: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    arr = np.atleast_2d(np.asarray(matrix, dtype="<f8"))
    if arr.ndim != 2:
        raise ParseError(f"SPMX stores 2-D matrices, got {arr.ndim} dimensions")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(SPMX_MAGIC, arr.shape[0], arr.shape[1]))
        fh.write(np.ascontiguousarray(arr).tobytes(order="C"))
    return path


def read_spmx(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"Cannot read {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise ParseError(f"{path}: truncated SPMX header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != SPMX_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise ParseError(f"{path}: expected {expected} bytes for a {rows}x{cols} matrix, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)


def write_csv(
    matrix: np.ndarray,
    path: Union[str, Path],
    header: Optional[Sequence[str]] = None,
) -> Path:
    """Write a vector (one column) or matrix with a header row."""
    path = Path(path)
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    names = list(header) if header is not None else [f"c{j}" for j in range(arr.shape[1])]
    if len(names) != arr.shape[1]:
        raise ParseError(f"{len(names)} header names for {arr.shape[1]} columns")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in arr:
            writer.writerow([repr(float(x)) for x in row])
    return path


def read_csv(path: Union[str, Path]) -> np.ndarray:
    """Read a headed numeric CSV into an ``rows x cols`` array."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"Cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0])
    try:
        values = [[float(x) for x in row] for row in rows[1:] if row]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if any(len(r) != width for r in values):
        raise ParseError(f"{path}: ragged rows")
    return np.array(values, dtype=np.float64).reshape(-1, width)


def read_matrix(path: Union[str, Path]) -> np.ndarray:
    """Dispatch on suffix: ``.spmx`` or ``.csv``."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".spmx":
        return read_spmx(path)
    if suffix == ".csv":
        return read_csv(path)
    raise ParseError(f"Unsupported matrix file suffix '{path.suffix}' ({path})")
