"""Shrinkage-thresholding and Euclidean projection onto the probability simplex."""

import numpy as np

from .exceptions import DimensionError, ParameterError


def soft_threshold(x, eta):
    """Elementwise ``sign(x) * max(|x| - eta, 0)``.

    Works on scalars and arrays alike; a scalar input returns a float.
    """
    if eta < 0:
        raise ParameterError(f"threshold level must be >= 0, got {eta}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - eta, 0.0)
    return float(out) if out.ndim == 0 else out


def project_simplex(y):
    """Euclidean projection of a vector onto the probability simplex.

    Sorts ``y`` ascending and scans from the top for the shift ``b`` at which
    the tail ``y_(i+1..d)`` sums to ``1 + (d - i) b``; the first ``i`` with
    ``b_i >= y_(i)`` fixes the shift, otherwise every coordinate stays in the
    support.  Returns ``max(y - b, 0)``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {y.shape}")
    d = y.size
    if d == 0:
        raise DimensionError("cannot project an empty vector")
    if not np.all(np.isfinite(y)):
        raise ParameterError("vector has non-finite entries")
    s = np.sort(y)
    tail = 0.0
    for i in range(d - 1, 0, -1):
        # s[i] is y_(i+1) in 1-based order
        tail += s[i]
        b = (tail - 1.0) / (d - i)
        if b >= s[i - 1]:
            return np.maximum(y - b, 0.0)
    b = (tail + s[0] - 1.0) / d
    return np.maximum(y - b, 0.0)


def project_rows(Y):
    """Project every row of ``Y`` onto the simplex (vectorized form of :func:`project_simplex`)."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] == 0:
        raise DimensionError(f"expected a non-empty 2-D array, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ParameterError("matrix has non-finite entries")
    m, d = Y.shape
    S = np.sort(Y, axis=1)
    # tail[:, i] = sum of S[:, i:], divided by the number of terms
    tail = np.cumsum(S[:, ::-1], axis=1)[:, ::-1]
    counts = np.arange(d, 0, -1, dtype=float)
    b = (tail - 1.0) / counts
    # candidate i (0-based, 1..d-1) is accepted when b[:, i] >= S[:, i-1];
    # the scan takes the largest accepted i, falling back to i = 0
    hit = np.zeros((m, d), dtype=bool)
    hit[:, 1:] = b[:, 1:] >= S[:, :-1]
    hit[:, 0] = True
    last = d - 1 - np.argmax(hit[:, ::-1], axis=1)
    shift = b[np.arange(m), last]
    return np.maximum(Y - shift[:, None], 0.0)


def prox_row_update(row, eta):
    """Threshold ``row`` at level ``eta`` then project it onto the simplex."""
    return project_simplex(soft_threshold(np.asarray(row, dtype=float), eta))


def prox_rows(Y, eta):
    """Row-wise :func:`prox_row_update` on a matrix."""
    if eta == 0:
        return project_rows(Y)
    return project_rows(soft_threshold(Y, eta))
