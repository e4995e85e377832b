"""File formats.

Matrix text: first line ``rows cols``, then one whitespace-separated row per
line. Matrix binary: two little-endian uint64 counts (rows, cols) followed by
row-major little-endian float64 values. Parcellation: one 1-based region index
per line. Features: CSV with a header, ``M`` correlation columns and a
trailing ``label`` column.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .models.dataset import PairedDataset
from .pairing import Parcellation

BINARY_SUFFIXES = (".bin", ".f64")
HEADER = np.dtype([("rows", "<u8"), ("cols", "<u8")])
FLOAT_FMT = "%.17g"


class FormatError(ValueError):
    pass


def is_binary(path, binary: bool | None = None) -> bool:
    if binary is not None:
        return binary
    return Path(path).suffix.lower() in BINARY_SUFFIXES


def read_matrix_header(path, binary: bool | None = None) -> tuple[int, int]:
    if is_binary(path, binary):
        with open(path, "rb") as fh:
            raw = fh.read(HEADER.itemsize)
        if len(raw) != HEADER.itemsize:
            raise FormatError(f"{path}: truncated binary header")
        head = np.frombuffer(raw, HEADER)[0]
        return int(head["rows"]), int(head["cols"])
    with open(path) as fh:
        return _parse_text_header(fh.readline(), path)


def _parse_text_header(line: str, path) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise FormatError(f"{path}: header must be 'rows cols', got {line.strip()!r}")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError(f"{path}: non-integer header {line.strip()!r}") from None
    if rows < 0 or cols < 0:
        raise FormatError(f"{path}: negative dimensions")
    return rows, cols


def read_matrix(path, binary: bool | None = None, mmap: bool = False) -> np.ndarray:
    """Load a matrix. Binary files can be memory-mapped instead of read."""
    if is_binary(path, binary):
        rows, cols = read_matrix_header(path, True)
        expected = HEADER.itemsize + 8 * rows * cols
        if os.path.getsize(path) != expected:
            raise FormatError(f"{path}: expected {expected} bytes for {rows}x{cols}, found {os.path.getsize(path)}")
        if mmap:
            return np.memmap(path, dtype="<f8", mode="r", offset=HEADER.itemsize, shape=(rows, cols))
        data = np.fromfile(path, dtype="<f8", offset=HEADER.itemsize)
        return data.reshape(rows, cols).astype(float)
    with open(path) as fh:
        rows, cols = _parse_text_header(fh.readline(), path)
        body = fh.read().split()
    if len(body) != rows * cols:
        raise FormatError(f"{path}: header says {rows}x{cols} but found {len(body)} values")
    try:
        return np.array(body, dtype=float).reshape(rows, cols)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_matrix(path, matrix, binary: bool | None = None) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    rows, cols = matrix.shape
    if is_binary(path, binary):
        with open(path, "wb") as fh:
            fh.write(np.array([(rows, cols)], HEADER).tobytes())
            fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"{rows} {cols}\n")
        if rows and cols:
            np.savetxt(fh, matrix, fmt=FLOAT_FMT, delimiter=" ")


def create_binary_matrix(path, rows: int, cols: int) -> np.memmap:
    """Binary matrix file opened for writing through a memory map."""
    with open(path, "wb") as fh:
        fh.write(np.array([(rows, cols)], HEADER).tobytes())
        fh.truncate(HEADER.itemsize + 8 * rows * cols)
    return np.memmap(path, dtype="<f8", mode="r+", offset=HEADER.itemsize, shape=(rows, cols))


def read_parcellation(path, n_regions: int | None = None) -> Parcellation:
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                labels.append(int(text))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: expected an integer region index, got {text!r}") from None
    if not labels:
        raise FormatError(f"{path}: no region labels")
    labels = np.asarray(labels, dtype=np.int64)
    return Parcellation(labels, int(labels.max()) if n_regions is None else n_regions)


def write_parcellation(path, parc: Parcellation) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in parc.labels)


def feature_header(n_features: int) -> list[str]:
    return [f"region_{k}" for k in range(1, n_features + 1)] + ["label"]


def write_features(path, data: PairedDataset) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(feature_header(data.n_features))
        for row, label in zip(data.X, data.T):
            writer.writerow([FLOAT_FMT % v for v in row] + [int(label)])


def append_feature_row(path, features, label: int) -> None:
    """Append one pair; writes the header first if the file is new or empty."""
    features = np.asarray(features, dtype=float)
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(feature_header(features.size))
        writer.writerow([FLOAT_FMT % v for v in features] + [int(label)])


def read_features(path) -> PairedDataset:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_numeric(rows[0][0]):
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: no feature rows")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise FormatError(f"{path}: rows must all have the same number (>= 2) of columns")
    try:
        table = np.array(rows, dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    labels = table[:, -1]
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise FormatError(f"{path}: label column must hold 0 or 1")
    return PairedDataset(table[:, :-1], labels.astype(np.int64))


def _is_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
