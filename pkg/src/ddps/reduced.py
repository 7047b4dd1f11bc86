"""
Reduced system built from the nonzero columns of ``G = D~^{-1} R~``.

Only the columns of ``R~`` (the remainder after dropping) that carry a
nonzero can make a column of ``G`` nonzero.  Their global indices ``c``
select the small coupled system ``(I + G)(c, c) z(c) = g(c)``; every other
unknown is recovered afterwards from ``z = g - G z``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
from scipy.sparse.linalg import LinearOperator

from ._parallel import pmap
from .block_factor import PIVOT_RTOL, getrf, solve_blocks
from .exceptions import DimensionMismatch, ReducedSingular
from .krylov import bicgstab
from .sparse import CsrMatrix, dense_gemv

__all__ = [
    "DropConfig",
    "ReducedSetup",
    "drop_columns",
    "compute_G",
    "assemble_Ghat",
    "solve_reduced",
    "apply_preconditioner",
    "DDPSPreconditioner",
]

log = logging.getLogger(__name__)

DIRECT_MAX_SIZE = 500


@dataclass(frozen=True)
class DropConfig:
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")


@dataclass(eq=False)
class ReducedSetup:
    """Dense per-partition columns of ``G`` restricted to the index set ``c``.

    Attributes
    ----------
    c : ndarray of int
        Sorted global column indices of the retained nonzero columns.
    G_cols : list of ndarray
        ``G_cols[i]`` has shape ``(size of part i, len(c))``, column-major.
    boundaries : ndarray
    Ghat : ndarray or None
        ``I(c, c) + G(c, c)``, filled in by :func:`assemble_Ghat`.
    """

    c: np.ndarray
    G_cols: list
    boundaries: np.ndarray
    Ghat: np.ndarray | None = None
    _lu: tuple | None = field(default=None, repr=False)

    @property
    def size(self):
        return len(self.c)

    def G_dense(self):
        """Full ``n x n`` dense ``G`` (testing aid)."""
        n = int(self.boundaries[-1])
        G = np.zeros((n, n))
        for i, Gi in enumerate(self.G_cols):
            G[self.boundaries[i]:self.boundaries[i + 1], self.c] = Gi
        return G


def _column_norms(Ri):
    # infinity norm of every column of a row block
    a = abs(Ri.tocsc())
    return np.asarray(a.max(axis=0).todense()).ravel()


def drop_columns(split, cfg):
    """Return ``R~``: ``R`` with small columns removed block row by block row.

    In block row ``i`` a column ``k`` is removed when
    ``||R_i(:, k)||_inf <= delta * max_j ||R_i(:, j)||_inf``.  Columns that
    attain the maximum are always kept, which only matters at ``delta = 1``.
    """
    if not isinstance(cfg, DropConfig):
        cfg = DropConfig(cfg)
    R = split.R.to_scipy()
    b = split.boundaries
    rows = []
    for i in range(len(b) - 1):
        Ri = R[b[i]:b[i + 1], :]
        if Ri.nnz == 0:
            rows.append(Ri)
            continue
        norms = _column_norms(Ri)
        m = norms.max()
        drop = (norms <= cfg.delta * m) & (norms < m)
        if np.any(drop):
            keep = sps.diags((~drop).astype(np.float64))
            Ri = Ri @ keep
        rows.append(Ri)
    Rt = sps.vstack(rows, format="csr") if rows else R
    return CsrMatrix.from_scipy(Rt)


def compute_G(F, Rtilde, part=None, workers=1):
    """Solve ``A_ii G_i = R~_i(:, c)`` for every partition.

    ``D~^{-1}`` is never formed; each block's LU factors are applied to the
    dense slab of ``R~`` columns listed in ``c``.
    """
    b = F.boundaries if part is None else part.boundaries
    if not np.array_equal(b, F.boundaries):
        raise DimensionMismatch("factorization and partition disagree")
    if Rtilde.shape != (F.n, F.n):
        raise DimensionMismatch("R~ does not match the factorized system")
    R = Rtilde.to_scipy()
    c = np.unique(Rtilde.col_idx).astype(np.int64)
    Rc = R[:, c].tocsr()

    def one(i):
        slab = np.asfortranarray(Rc[b[i]:b[i + 1], :].toarray())
        if slab.shape[1] == 0 or not slab.any():
            return np.zeros(slab.shape, order="F")
        return np.asfortranarray(F.factors[i].solve(slab))

    G_cols = pmap(one, range(F.p), workers)
    return ReducedSetup(c=c, G_cols=G_cols, boundaries=np.asarray(b))


def _locate(setup):
    b = setup.boundaries
    owner = np.searchsorted(b, setup.c, side="right") - 1
    return owner, setup.c - b[owner]


def assemble_Ghat(setup):
    """Build ``I(c, c) + G(c, c)`` and store it on ``setup``."""
    k = setup.size
    Ghat = np.eye(k, order="F")
    if k:
        owner, local = _locate(setup)
        for a in range(k):
            Ghat[a, :] += setup.G_cols[owner[a]][local[a], :]
    setup.Ghat = Ghat
    setup._lu = None
    return Ghat


def _resolve_method(method, size, direct_max=DIRECT_MAX_SIZE):
    if method == "auto":
        return "direct" if size <= direct_max else "iterative"
    if method not in ("direct", "iterative"):
        raise ValueError(f"unknown reduced-solve method {method!r}")
    return method


def factor_Ghat(setup):
    if setup.Ghat is None:
        assemble_Ghat(setup)
    if setup._lu is None:
        if setup.size == 0:
            setup._lu = (np.zeros((0, 0)), np.zeros(0, dtype=np.int32))
            return setup._lu
        scale = np.max(np.abs(setup.Ghat))
        lu, piv = getrf(setup.Ghat)
        if not np.all(np.isfinite(lu)) or np.any(np.abs(np.diag(lu)) < PIVOT_RTOL * scale):
            raise ReducedSingular(f"reduced system of size {setup.size} is singular")
        setup._lu = (lu, piv)
    return setup._lu


def solve_reduced(setup, ghat, method="direct", eps_in=1e-4, max_inner=100):
    """Solve ``Ghat z = ghat``.

    Returns
    -------
    z : ndarray
    iterations : float
        BiCGStab iterations (half-steps count 0.5); 0 for the direct path.
    ok : bool
        False when the inner iteration broke down or hit ``max_inner``; the
        current iterate is returned regardless.
    """
    ghat = np.asarray(ghat, dtype=np.float64)
    if ghat.shape != (setup.size,):
        raise DimensionMismatch(f"reduced right-hand side must have length {setup.size}")
    if setup.size == 0:
        return np.zeros(0), 0.0, True
    method = _resolve_method(method, setup.size)
    if method == "direct":
        return sla.lu_solve(factor_Ghat(setup), ghat, check_finite=False), 0.0, True
    if setup.Ghat is None:
        assemble_Ghat(setup)
    z, rep = bicgstab(setup.Ghat, ghat, eps=eps_in, max_iter=max_inner)
    if not rep.converged:
        log.info("inner BiCGStab stopped at relres %.3e after %.1f iterations (%s)",
                 rep.final_relres, rep.outer_iterations, rep.breakdown or "max_inner")
    return z, rep.outer_iterations, rep.converged


class DDPSPreconditioner:
    """Apply ``P^{-1}`` for ``P = D~ + R~`` through the reduced system.

    Keeps running totals of inner iterations and inner failures so the
    outer solver can report averages.
    """

    def __init__(self, F, setup, method="auto", eps_in=1e-4, max_inner=100,
                 workers=1, direct_max=DIRECT_MAX_SIZE):
        self.F = F
        self.setup = setup
        self.method = _resolve_method(method, setup.size, direct_max)
        self.eps_in = eps_in
        self.max_inner = max_inner
        self.workers = workers
        if setup.Ghat is None:
            assemble_Ghat(setup)
        if self.method == "direct":
            factor_Ghat(setup)
        self.reset_counters()

    def reset_counters(self):
        self.applications = 0
        self.inner_iterations = 0.0
        self.inner_failures = 0

    @property
    def shape(self):
        return (self.F.n, self.F.n)

    def __call__(self, y):
        z, iters, ok = apply_preconditioner(
            self.F, self.setup, y, method=self.method, eps_in=self.eps_in,
            max_inner=self.max_inner, workers=self.workers, return_info=True,
        )
        self.applications += 1
        self.inner_iterations += iters
        self.inner_failures += int(not ok)
        return z

    matvec = __call__

    def as_linear_operator(self):
        return LinearOperator(self.shape, matvec=self.__call__, dtype=np.float64)


def apply_preconditioner(F, setup, y, method="direct", eps_in=1e-4, max_inner=100,
                         workers=1, return_info=False):
    """Solve ``P z = y``.

    1. ``g = D~^{-1} y``
    2. ``ghat = g(c)``
    3. solve ``Ghat zhat = ghat``
    4. ``z = g - G(:, c) zhat``, one dense gemv per partition
    """
    y = np.asarray(y, dtype=np.float64)
    g = solve_blocks(F, y, workers)
    if setup.size == 0:
        return (g, 0.0, True) if return_info else g
    zhat, iters, ok = solve_reduced(setup, g[setup.c], method, eps_in, max_inner)
    b = setup.boundaries
    z = np.empty_like(g)

    def one(i):
        z[b[i]:b[i + 1]] = g[b[i]:b[i + 1]] - dense_gemv(setup.G_cols[i], zhat)

    pmap(one, range(len(setup.G_cols)), workers)
    return (z, iters, ok) if return_info else z
