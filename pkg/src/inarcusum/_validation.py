"""Input validation helpers shared by the functional API and the estimator."""

from __future__ import annotations

import numbers

import numpy as np


def check_counts(values, *, name="X", min_length=1):
    """Validate a 1-D sequence of nonnegative integer counts.

    Returns an ``int64`` array. Float input is accepted only when every
    entry is integral.
    """
    arr = np.asarray(values)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} value(s), got {arr.size}")
    if arr.dtype.kind == "b" or arr.dtype.kind not in "iuf":
        raise ValueError(f"{name} must contain integer counts, got dtype {arr.dtype}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError(f"{name} must contain integer counts")
    if np.any(arr < 0):
        raise ValueError(f"{name} must contain nonnegative counts")
    return arr.astype(np.int64)


def check_lag_support(lags, order=None):
    """Normalize a lag specification to a sorted tuple of positive ints.

    ``lags`` may be an int ``p`` (meaning lags ``1..p``) or an iterable of lags.
    """
    if isinstance(lags, numbers.Integral):
        if lags < 1:
            raise ValueError(f"order must be positive, got {lags}")
        support = tuple(range(1, int(lags) + 1))
    else:
        support = tuple(sorted({int(lag) for lag in lags}))
        if not support:
            raise ValueError("lag support must be nonempty")
        if support[0] < 1:
            raise ValueError(f"lags must be positive, got {support}")
    if order is not None and support[-1] > order:
        raise ValueError(f"lag {support[-1]} exceeds model order {order}")
    return support


def check_level(alpha, name="alpha"):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {alpha}")
    return alpha
