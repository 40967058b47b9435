"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import InvalidInputError, InvalidParameterError, ShapeMismatchError


def check_count(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_finite_scalar(x, name: str = "x") -> float:
    try:
        x = float(x)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be a real number, got {x!r}") from exc
    if not np.isfinite(x):
        raise InvalidInputError(f"{name} must be finite, got {x}")
    return x


def as_points(x, name: str = "x") -> np.ndarray:
    """Coerce evaluation points to a finite 1-D float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim > 1:
        raise InvalidInputError(f"{name} must be a scalar or 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return np.atleast_1d(arr)


def as_stack(values, name: str = "values") -> np.ndarray:
    """Stack a sequence of equally-shaped matrices (or scalars) into one array.

    The leading axis indexes the items; the trailing axes are the item shape
    (empty for scalars).
    """
    if isinstance(values, np.ndarray):
        arr = np.asarray(values, dtype=float)
    else:
        items = [np.asarray(v, dtype=float) for v in values]
        if not items:
            raise InvalidInputError(f"{name} is empty")
        shape = items[0].shape
        for i, item in enumerate(items):
            if item.shape != shape:
                raise ShapeMismatchError(
                    f"{name}[{i}] has shape {item.shape}, expected {shape}"
                )
        arr = np.stack(items)
    if arr.ndim == 0 or arr.shape[0] == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr
