"""Block-diagonal splitting ``A = D + R`` and exact LU of the diagonal blocks."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from ._parallel import pmap
from .exceptions import DimensionMismatch, SingularBlock
from .sparse import CsrMatrix

__all__ = ["BlockSplit", "BlockLU", "BlockFactorization", "split", "factorize", "solve_blocks"]

PIVOT_RTOL = 1e-14


def getrf(a):
    """LAPACK partial-pivoting LU; singularity is left to the caller to judge."""
    (fn,) = sla.get_lapack_funcs(("getrf",), (a,))
    with np.errstate(all="ignore"):
        lu, piv, _ = fn(a, overwrite_a=False)
    return lu, piv


@dataclass(frozen=True, eq=False)
class BlockSplit:
    """Diagonal blocks ``A_ii`` and the off-block remainder ``R``."""

    blocks: list
    R: CsrMatrix
    boundaries: np.ndarray

    @property
    def n(self):
        return int(self.boundaries[-1])

    def reassemble(self):
        D = sps.block_diag([b.to_scipy() for b in self.blocks], format="csr")
        return CsrMatrix.from_scipy(D + self.R.to_scipy())


def split(A, part):
    """Cut ``A`` into its ``p`` diagonal blocks and the remainder ``R = A - D``."""
    if A.n_rows != A.n_cols or A.n_rows != part.n:
        raise DimensionMismatch(f"matrix of shape {A.shape} does not match partition of {part.n} rows")
    a = A.to_scipy().tocoo()
    ids = part.part_ids()
    inside = ids[a.row] == ids[a.col]
    R = CsrMatrix.from_coo(A.n_rows, A.n_cols, a.row[~inside], a.col[~inside], a.data[~inside])
    blocks = [A.submatrix(lo, hi, lo, hi) for lo, hi in part.ranges()]
    return BlockSplit(blocks=blocks, R=R, boundaries=part.boundaries)


@dataclass(frozen=True, eq=False)
class BlockLU:
    """Partial-pivoting LU of one block, as returned by LAPACK ``getrf``."""

    lu: np.ndarray
    piv: np.ndarray
    perturbed: bool = False

    @property
    def size(self):
        return self.lu.shape[0]

    @property
    def L(self):
        return np.tril(self.lu, -1) + np.eye(self.size)

    @property
    def U(self):
        return np.triu(self.lu)

    @property
    def perm(self):
        """Row permutation ``P`` (as an index array) with ``A[perm] = L @ U``."""
        perm = np.arange(self.size)
        for i, j in enumerate(self.piv):
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def solve(self, b):
        if self.size == 0:
            return np.zeros_like(b)
        return sla.lu_solve((self.lu, self.piv), b, check_finite=False)


@dataclass(frozen=True, eq=False)
class BlockFactorization:
    factors: list
    boundaries: np.ndarray

    @property
    def p(self):
        return len(self.factors)

    @property
    def n(self):
        return int(self.boundaries[-1])


def _lu_checked(a):
    if a.size == 0:
        return BlockLU(np.zeros((0, 0), order="F"), np.zeros(0, dtype=np.int32))
    scale = np.max(np.abs(a)) if a.size else 0.0
    lu, piv = getrf(a)
    d = np.abs(np.diag(lu))
    if scale == 0.0 or not np.all(np.isfinite(lu)) or np.any(d < PIVOT_RTOL * scale):
        return None
    return BlockLU(lu, piv)


def factorize(split, perturb=None, workers=1):
    """Dense LU with partial pivoting of every diagonal block.

    Parameters
    ----------
    split : BlockSplit
    perturb : float, optional
        When a pivot falls below ``1e-14 * max|A_ii|``, add
        ``perturb * ||A_ii||_inf`` to the block diagonal and refactorize once.
    workers : int
        Blocks are factorized independently on this many threads.

    Raises
    ------
    SingularBlock
    """

    def one(i):
        a = split.blocks[i].toarray()
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"block {i} is not square")
        f = _lu_checked(np.asfortranarray(a))
        if f is not None:
            return f
        if not perturb:
            raise SingularBlock(i)
        shift = perturb * np.max(np.sum(np.abs(a), axis=1))
        if shift == 0.0:
            raise SingularBlock(i, f"diagonal block {i} is zero; perturbation has no scale")
        f = _lu_checked(np.asfortranarray(a + shift * np.eye(a.shape[0])))
        if f is None:
            raise SingularBlock(i, f"diagonal block {i} is singular even after perturbation")
        return BlockLU(f.lu, f.piv, perturbed=True)

    factors = pmap(one, range(len(split.blocks)), workers)
    return BlockFactorization(factors=factors, boundaries=split.boundaries)


def solve_blocks(F, y, workers=1):
    """Apply ``D~^{-1}`` slice by slice."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != F.n:
        raise DimensionMismatch(f"vector of length {y.shape[0]} does not match {F.n} rows")
    out = np.empty_like(y)
    b = F.boundaries

    def one(i):
        out[b[i]:b[i + 1]] = F.factors[i].solve(y[b[i]:b[i + 1]])

    pmap(one, range(F.p), workers)
    return out
