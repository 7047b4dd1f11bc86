"""Matrix Market input/output.

The header is validated here so unsupported fields produce a precise error;
the body is parsed by :func:`scipy.io.mmread`.
"""
import numpy as np
import scipy.io
import scipy.sparse as sps

from .exceptions import ParseError, UnsupportedField
from .sparse import CsrMatrix

__all__ = ["read_matrix_market", "read_vector", "write_matrix_market", "write_vector"]

_FORMATS = {"coordinate", "array"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric"}


def _header(path):
    with open(path, "r") as fh:
        first = fh.readline()
    tokens = first.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket" or tokens[1] != "matrix":
        raise ParseError(f"{path}: missing or malformed %%MatrixMarket banner")
    fmt, field, symmetry = tokens[2:]
    if fmt not in _FORMATS:
        raise ParseError(f"{path}: unknown format {fmt!r}")
    if field in ("complex", "pattern"):
        raise UnsupportedField(f"{path}: {field} matrices are not supported")
    if field not in ("real", "integer", "double"):
        raise ParseError(f"{path}: unknown field {field!r}")
    if symmetry not in _SYMMETRIES:
        if symmetry == "hermitian":
            raise UnsupportedField(f"{path}: hermitian storage is not supported")
        raise ParseError(f"{path}: unknown symmetry {symmetry!r}")
    return fmt, field, symmetry


def _read(path):
    _header(path)
    try:
        return scipy.io.mmread(path)
    except (ValueError, IndexError, OSError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def read_matrix_market(path):
    """Read a real Matrix Market file into a canonical :class:`CsrMatrix`.

    Symmetric and skew-symmetric storage is expanded to general form and
    duplicate coordinate entries are summed.
    """
    data = _read(path)
    if sps.issparse(data):
        return CsrMatrix.from_scipy(data)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    return CsrMatrix.from_dense(data)


def read_vector(path):
    """Read a right-hand side stored as an ``n x 1`` (or ``1 x n``) array."""
    data = _read(path)
    if sps.issparse(data):
        data = data.toarray()
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2 and 1 in data.shape:
        return data.ravel()
    if data.ndim == 1:
        return data
    raise ParseError(f"{path}: expected a single column, got shape {data.shape}")


def write_matrix_market(path, A, comment=""):
    scipy.io.mmwrite(path, A.to_scipy().tocoo(), comment=comment, field="real",
                     precision=17, symmetry="general")


def write_vector(path, x, comment=""):
    scipy.io.mmwrite(path, np.asarray(x, dtype=np.float64)[:, None], comment=comment,
                     field="real", precision=17)
