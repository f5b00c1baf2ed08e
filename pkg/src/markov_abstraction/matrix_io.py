"""Plain-text CSV storage for dense matrices."""

import csv

import numpy as np

from .exceptions import FormatError


def format_float(v):
    """17 significant digits; enough for an exact float64 round trip."""
    return "%.16e" % v


def store_matrix(path, M):
    """Write ``M`` as headerless CSV, one row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([format_float(v) for v in row])


def load_matrix(path):
    """Read a headerless CSV matrix.

    Raises
    ------
    FormatError
        On an empty file, ragged rows or non-numeric fields; the message
        names the 1-based line number.
    OSError
        If the file cannot be opened.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                raise FormatError(f"{path}: line {lineno} is empty")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise FormatError(
                    f"{path}: line {lineno} has {len(fields)} columns, expected {width}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                col = next(i for i, f in enumerate(fields, 1) if not _is_float(f))
                raise FormatError(
                    f"{path}: line {lineno}, column {col}: non-numeric field {fields[col - 1]!r}"
                ) from None
    if not rows:
        raise FormatError(f"{path}: file is empty")
    return np.array(rows, dtype=float)


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True
