"""
Sparse and dense primitives used throughout the solver.

``CsrMatrix`` is a thin immutable wrapper over the canonical CSR triple
(``row_ptr``, ``col_idx``, ``values``).  Heavy lifting (duplicate summation,
index sorting, the row kernel of the matvec) is delegated to scipy.sparse;
the wrapper exists to pin the canonical form and to make row-range parallel
products deterministic.

Dense matrices are plain column-major ``numpy`` arrays and vectors are 1-D
``float64`` arrays.
"""
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from ._parallel import pmap
from .exceptions import DimensionMismatch, NotSquare

__all__ = [
    "CsrMatrix",
    "spmv",
    "inf_norm",
    "dense_gemv",
    "compute_diag_dominance",
]


def _readonly(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


class CsrMatrix:
    """Canonical compressed-row matrix.

    Within every row the column indices are strictly increasing and no
    stored value is zero.  Instances are immutable; all arrays are
    read-only views.

    Parameters
    ----------
    n_rows, n_cols : int
        Shape.
    row_ptr, col_idx, values : array_like
        The CSR triple.  It must already be canonical unless
        ``canonicalize=True`` is passed, in which case duplicates are summed,
        columns sorted and explicit zeros removed.
    """

    def __init__(self, n_rows, n_cols, row_ptr, col_idx, values, canonicalize=False):
        n_rows, n_cols = int(n_rows), int(n_cols)
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        row_ptr = np.asarray(row_ptr, dtype=np.int64)
        col_idx = np.asarray(col_idx, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if row_ptr.shape != (n_rows + 1,):
            raise DimensionMismatch(f"row_ptr must have length {n_rows + 1}")
        if col_idx.shape != values.shape or col_idx.ndim != 1:
            raise DimensionMismatch("col_idx and values must be 1-D of equal length")
        if row_ptr[0] != 0 or row_ptr[-1] != len(col_idx) or np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing from 0 to nnz")
        if len(col_idx) and (col_idx.min() < 0 or col_idx.max() >= n_cols):
            raise ValueError("column index out of range")

        if canonicalize:
            m = sps.csr_matrix((values, col_idx, row_ptr), shape=(n_rows, n_cols), copy=True)
            m.sum_duplicates()
            m.eliminate_zeros()
            m.sort_indices()
            row_ptr, col_idx, values = m.indptr, m.indices, m.data
        elif not _is_canonical(n_rows, row_ptr, col_idx, values):
            raise ValueError("CSR triple is not canonical; pass canonicalize=True")

        self.n_rows = n_rows
        self.n_cols = n_cols
        self.row_ptr = _readonly(row_ptr, np.int64)
        self.col_idx = _readonly(col_idx, np.int64)
        self.values = _readonly(values, np.float64)

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def from_scipy(cls, m):
        m = sps.csr_matrix(m, dtype=np.float64, copy=True)
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data, canonicalize=True)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionMismatch("expected a 2-D array")
        return cls.from_scipy(sps.csr_matrix(a))

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals):
        m = sps.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
        return cls.from_scipy(m)

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def zeros(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, np.zeros(n_rows + 1, dtype=np.int64), [], [])

    # ------------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.values)

    @cached_property
    def _scipy(self):
        m = sps.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=self.shape, copy=False
        )
        m.has_sorted_indices = True
        m.has_canonical_format = True
        return m

    def to_scipy(self):
        """Return a (fresh) ``scipy.sparse.csr_matrix`` copy."""
        return self._scipy.copy()

    def toarray(self):
        return self._scipy.toarray()

    def canonicalize(self):
        # Instances are canonical by construction.
        return self

    def transpose(self):
        return CsrMatrix.from_scipy(self._scipy.T)

    T = property(transpose)

    def abs(self):
        return CsrMatrix(self.n_rows, self.n_cols, self.row_ptr, self.col_idx, np.abs(self.values))

    def diagonal(self):
        return self._scipy.diagonal()

    def submatrix(self, r0, r1, c0, c1):
        return CsrMatrix.from_scipy(self._scipy[r0:r1, c0:c1])

    def row_slice(self, r0, r1):
        return CsrMatrix.from_scipy(self._scipy[r0:r1, :])

    def __matmul__(self, x):
        return spmv(self, x)

    def __eq__(self, other):
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"

    # cached row-chunk views for the parallel matvec
    def _chunks(self, workers):
        cache = self.__dict__.setdefault("_chunk_cache", {})
        if workers not in cache:
            edges = np.linspace(0, self.n_rows, workers + 1).astype(np.int64)
            cache[workers] = [
                (int(a), int(b), self._scipy[a:b, :]) for a, b in zip(edges[:-1], edges[1:]) if b > a
            ]
        return cache[workers]


def _is_canonical(n_rows, row_ptr, col_idx, values):
    if np.any(values == 0):
        return False
    if len(col_idx) < 2:
        return True
    d = np.diff(col_idx)
    # a drop in column index is allowed only at a row start
    starts = np.zeros(len(col_idx), dtype=bool)
    starts[row_ptr[1:-1][row_ptr[1:-1] < len(col_idx)]] = True
    return bool(np.all((d > 0) | starts[1:]))


def spmv(A, x, workers=1):
    """Sparse matrix-vector product ``A @ x``.

    Every row is summed in stored column order, so the result is bitwise
    independent of ``workers``; rows are split into contiguous ranges when
    ``workers > 1``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n_cols,):
        raise DimensionMismatch(f"vector of length {x.shape} does not match {A.n_cols} columns")
    if workers is None or workers <= 1 or A.n_rows < 2:
        return A._scipy @ x
    out = np.empty(A.n_rows)

    def run(chunk):
        a, b, m = chunk
        out[a:b] = m @ x

    pmap(run, A._chunks(workers), workers)
    return out


def inf_norm(x):
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(x)))


def dense_gemv(G, x):
    """``G @ x`` for a dense (column-major) block with shape checking."""
    G = np.asarray(G, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if G.ndim != 2 or x.shape != (G.shape[1],):
        raise DimensionMismatch(f"cannot multiply {G.shape} by {x.shape}")
    if G.shape[1] == 0:
        return np.zeros(G.shape[0])
    return G @ x


def compute_diag_dominance(A):
    """Fraction of rows with ``|a_ii| >= sum_{j != i} |a_ij|``.

    Reporting statistic only.
    """
    if A.n_rows != A.n_cols:
        raise NotSquare("diagonal dominance needs a square matrix")
    if A.n_rows == 0:
        return 1.0
    absA = A._scipy.copy()
    absA.data = np.abs(absA.data)
    row_sum = np.asarray(absA.sum(axis=1)).ravel()
    d = np.abs(A.diagonal())
    return float(np.mean(d >= row_sum - d))
