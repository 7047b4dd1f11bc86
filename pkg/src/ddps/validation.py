"""Input coercion shared by the estimator and the free functions."""
import numbers

import numpy as np
import scipy.sparse as sps

from .exceptions import DimensionMismatch, NotSquare
from .sparse import CsrMatrix


def check_matrix(A, square=True):
    """Accept a :class:`CsrMatrix`, any scipy sparse matrix or a 2-D array."""
    if isinstance(A, CsrMatrix):
        M = A
    elif sps.issparse(A):
        M = CsrMatrix.from_scipy(A)
    else:
        arr = np.asarray(A, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D matrix, got {arr.ndim} dimensions")
        M = CsrMatrix.from_dense(arr)
    if not np.all(np.isfinite(M.values)):
        raise ValueError("matrix contains NaN or infinity")
    if square and M.n_rows != M.n_cols:
        raise NotSquare(f"expected a square matrix, got shape {M.shape}")
    return M


def check_vector(f, n):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 2 and 1 in f.shape:
        f = f.ravel()
    if f.shape != (n,):
        raise DimensionMismatch(f"vector of shape {f.shape} does not match n={n}")
    if not np.all(np.isfinite(f)):
        raise ValueError("vector contains NaN or infinity")
    return f


def check_scalar(x, name, lo=None, hi=None, integer=False):
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(x, kind) or isinstance(x, bool):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a real number'}, got {x!r}")
    if lo is not None and x < lo or hi is not None and x > hi:
        raise ValueError(f"{name}={x} outside [{lo}, {hi}]")
    return x
