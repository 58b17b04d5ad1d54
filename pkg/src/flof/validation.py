"""Input validation helpers shared across the package.

Fields are plain ndarrays: a scalar field has one value per cell, a vector
field appends a trailing component axis of length ``ndim(grid)``. The cell
size is 1 in every axis, including time.
"""

import numpy as np


def as_scalar_field(a, name="field"):
    """Coerce to a float array and check every value is finite."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim < 1:
        raise ValueError(f"{name} must have at least one axis")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_vector_field(u, name="deformation"):
    """Coerce to a float array of shape dims + (len(dims),) with finite entries."""
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[-1] != arr.ndim - 1:
        raise ValueError(
            f"{name} must have shape dims + (len(dims),), got {arr.shape}"
        )
    if arr[..., 0].size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_dims(a, b, name_a="first field", name_b="second field"):
    if a.shape != b.shape:
        raise ValueError(
            f"{name_a} and {name_b} must share dims, got {a.shape} vs {b.shape}"
        )


def check_grid_match(field, vec, name_field="field", name_vec="deformation"):
    """The vector field must live on the same grid as the scalar field."""
    if field.shape != vec.shape[:-1]:
        raise ValueError(
            f"{name_vec} grid {vec.shape[:-1]} does not match {name_field} "
            f"dims {field.shape}"
        )


def check_fitted(estimator, attribute):
    if getattr(estimator, attribute, None) is None:
        raise RuntimeError(
            f"{type(estimator).__name__} instance is not fitted yet; call fit() first"
        )
