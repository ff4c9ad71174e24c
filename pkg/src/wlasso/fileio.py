"""CSV ingestion for the command-line tools.

Dialect: comma separated, '.' decimal, optional single header row which is
auto-detected (first row containing any non-numeric cell is dropped).
"""

import csv

import numpy as np


class MalformedInputError(Exception):
    """Raised when a CSV file cannot be parsed into a numeric matrix."""


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_matrix_csv(path: str) -> np.ndarray:
    """Read an n x p numeric matrix; NaN or ragged rows are rejected."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise MalformedInputError(f"{path}: empty file")
    if not all(_is_number(tok) for tok in rows[0]):
        rows = rows[1:]
        if not rows:
            raise MalformedInputError(f"{path}: header only, no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MalformedInputError(
                f"{path}: row {i + 1} has {len(row)} cells, expected {width}"
            )
        for j, tok in enumerate(row):
            if not _is_number(tok):
                raise MalformedInputError(f"{path}: non-numeric cell at row {i + 1}: {tok!r}")
            data[i, j] = float(tok)
    if np.isnan(data).any():
        raise MalformedInputError(f"{path}: NaN entries are not allowed")
    return data


def read_vector_csv(path: str) -> np.ndarray:
    """Read an n x 1 CSV as a flat vector."""
    data = read_matrix_csv(path)
    if data.ndim != 2 or data.shape[1] != 1:
        raise MalformedInputError(f"{path}: expected a single column, got {data.shape[1]}")
    return data.ravel()
