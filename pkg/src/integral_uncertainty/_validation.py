"""Input checks shared by the estimators."""
import numpy as np


def check_grid_array(X, n_features=None, name="X", allow_complex=True):
    """Return ``X`` as a finite 2-D array of grid samples, one row per function.

    A 1-D input is treated as a single sample.  Unlike
    :func:`sklearn.utils.check_array`, complex values are accepted.
    """
    X = np.asarray(X)
    if X.dtype == object:
        raise TypeError(f"{name} must be numeric")
    if np.iscomplexobj(X):
        if not allow_complex:
            raise ValueError(f"{name} must be real for this transform")
        X = X.astype(complex)
    else:
        X = X.astype(float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got {X.ndim}-D")
    if X.shape[0] == 0:
        raise ValueError(f"{name} has no samples")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"{name} has {X.shape[1]} columns; expected {n_features} grid values")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinity")
    return X


def check_positive(value, name, strict=True):
    if not np.isfinite(value) or (value <= 0 if strict else value < 0):
        raise ValueError(f"{name} must be {'positive' if strict else 'non-negative'}, got {value}")
    return value
