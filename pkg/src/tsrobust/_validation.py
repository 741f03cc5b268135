"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np
from sklearn.utils import check_array, check_random_state  # noqa: F401  (re-export)

from .exceptions import InsufficientDataError


def check_series(X, min_samples=2):
    """Coerce ``X`` to a float (T, n) array in time order.

    Accepts a :class:`~tsrobust.model.TimeSeriesData`, a pandas DataFrame or
    anything :func:`sklearn.utils.check_array` understands. Returns
    ``(values, labels)``; ``labels`` is ``None`` when the input carries none.
    """
    from .model import TimeSeriesData

    if isinstance(X, TimeSeriesData):
        return X.values, X.labels
    labels = None
    if hasattr(X, "columns"):
        labels = tuple(str(c) for c in X.columns)
    try:
        values = check_array(X, dtype=np.float64, ensure_min_samples=min_samples)
    except ValueError as exc:
        if "minimum of" in str(exc):
            raise InsufficientDataError(str(exc)) from exc
        raise
    return values, labels


def check_count(value, name, minimum=0):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


def as_seed_sequence(seed):
    """Normalise ``seed`` into a :class:`numpy.random.SeedSequence`."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child_seed(seed, index):
    """Seed for replicate/trial ``index`` derived from a master ``seed``.

    The index is mixed in as the SeedSequence spawn key, so children are
    independent of one another and of the order in which they are drawn.
    """
    parent = as_seed_sequence(seed)
    return np.random.SeedSequence(parent.entropy, spawn_key=parent.spawn_key + (int(index),))
