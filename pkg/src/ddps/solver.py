"""
Estimator-style front end for the hybrid solver.

``fit`` performs every setup stage that does not need a right-hand side
(partition, split, block LU, column dropping, ``G`` and the reduced
matrix); ``solve`` then runs the outer BiCGStab iteration with the reduced
system as preconditioner.  Because the class derives from
``sklearn.base.BaseEstimator`` it supports ``get_params``/``set_params``,
``clone`` and parameter grids.
"""
import time

import numpy as np
from scipy.sparse.linalg import LinearOperator
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .block_factor import factorize, split
from .krylov import Failure, SolveReport, bicgstab
from .partition import (
    Partition,
    apply_permutation,
    partition_bisection,
    partition_contiguous,
    partition_from_part_vector,
    read_partition_file,
    symmetrize_pattern,
)
from .reduced import DIRECT_MAX_SIZE, DDPSPreconditioner, DropConfig, assemble_Ghat, compute_G, drop_columns
from .sparse import inf_norm, spmv
from .validation import check_matrix, check_scalar, check_vector

__all__ = ["DDPSSolver", "ddps_solve"]


class DDPSSolver(BaseEstimator):
    """Hybrid block-LU / reduced-system solver for general sparse ``A x = f``.

    Parameters
    ----------
    partitions : int, default=2
        Number of block rows ``p``.
    partitioner : {'contiguous', 'bisection', 'file'} or Partition, default='contiguous'
        How the block rows are chosen.  ``'bisection'`` reorders the system
        by recursive level-set bisection of ``(|A| + |A^T|) / 2``;
        ``'file'`` reads a part vector from ``partition_file``.
    partition_file : str or array_like, optional
        Path to a part-id file, or the part vector itself.
    delta : float, default=0.9
        Column drop tolerance in ``[0, 1]``.  ``0`` keeps every coupling
        column.
    eps_out, eps_in : float
        Outer and inner relative residual tolerances (infinity norm).
    max_outer, max_inner : int
        Iteration caps of the outer and inner BiCGStab.
    reduced : {'auto', 'direct', 'iterative'}, default='auto'
        Reduced-system solver; ``'auto'`` factorizes it directly up to
        ``reduced_direct_max`` unknowns.
    perturb : float, optional
        Relative diagonal shift tried once when a block LU breaks down.
    n_jobs : int, default=1
        Worker threads for partition-parallel stages.  Results do not
        depend on it.

    Attributes
    ----------
    partition_ : Partition
    factorization_ : BlockFactorization
    setup_ : ReducedSetup
    preconditioner_ : DDPSPreconditioner
    reduced_size_ : int
    timings_ : dict
    report_ : SolveReport
        Set by :meth:`solve`.
    """

    def __init__(self, partitions=2, partitioner="contiguous", partition_file=None,
                 delta=0.9, eps_out=1e-5, eps_in=1e-4, max_outer=1000, max_inner=100,
                 reduced="auto", reduced_direct_max=DIRECT_MAX_SIZE, perturb=None, n_jobs=1):
        self.partitions = partitions
        self.partitioner = partitioner
        self.partition_file = partition_file
        self.delta = delta
        self.eps_out = eps_out
        self.eps_in = eps_in
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.reduced = reduced
        self.reduced_direct_max = reduced_direct_max
        self.perturb = perturb
        self.n_jobs = n_jobs

    def _validate_params(self):
        check_scalar(self.partitions, "partitions", lo=1, integer=True)
        check_scalar(self.delta, "delta", lo=0.0, hi=1.0)
        check_scalar(self.eps_out, "eps_out", lo=0.0)
        check_scalar(self.eps_in, "eps_in", lo=0.0)
        check_scalar(self.max_outer, "max_outer", lo=1, integer=True)
        check_scalar(self.max_inner, "max_inner", lo=1, integer=True)
        check_scalar(self.n_jobs, "n_jobs", lo=1, integer=True)
        if self.reduced not in ("auto", "direct", "iterative"):
            raise ValueError(f"reduced must be 'auto', 'direct' or 'iterative', got {self.reduced!r}")
        if not (isinstance(self.partitioner, Partition)
                or self.partitioner in ("contiguous", "bisection", "file")):
            raise ValueError(f"unknown partitioner {self.partitioner!r}")

    def _make_partition(self, A):
        n = A.n_rows
        if isinstance(self.partitioner, Partition):
            if self.partitioner.n != n:
                raise ValueError("supplied partition does not match the matrix size")
            return self.partitioner
        if self.partitioner == "contiguous":
            return partition_contiguous(n, self.partitions)
        if self.partitioner == "bisection":
            return partition_bisection(symmetrize_pattern(A), self.partitions)
        if self.partition_file is None:
            raise ValueError("partitioner='file' needs partition_file")
        if isinstance(self.partition_file, (str, bytes)) or hasattr(self.partition_file, "__fspath__"):
            return read_partition_file(self.partition_file, n)
        return partition_from_part_vector(self.partition_file, n)

    def fit(self, A, y=None):
        """Run the right-hand-side independent setup for matrix ``A``."""
        self._validate_params()
        A = check_matrix(A)
        timings = {}
        clock = time.perf_counter

        t = clock()
        part = self._make_partition(A)
        Ap, _ = apply_permutation(A, np.zeros(A.n_rows), part)
        timings["partition"] = clock() - t

        t = clock()
        blocks = split(Ap, part)
        timings["split"] = clock() - t

        t = clock()
        F = factorize(blocks, perturb=self.perturb, workers=self.n_jobs)
        timings["factorize"] = clock() - t

        t = clock()
        Rt = drop_columns(blocks, DropConfig(self.delta))
        timings["drop"] = clock() - t

        t = clock()
        setup = compute_G(F, Rt, part, workers=self.n_jobs)
        assemble_Ghat(setup)
        precond = DDPSPreconditioner(
            F, setup, method=self.reduced, eps_in=self.eps_in, max_inner=self.max_inner,
            workers=self.n_jobs, direct_max=self.reduced_direct_max,
        )
        timings["compute_G"] = clock() - t

        self.A_ = A
        self.permuted_A_ = Ap
        self.partition_ = part
        self.split_ = blocks
        self.R_tilde_ = Rt
        self.factorization_ = F
        self.setup_ = setup
        self.preconditioner_ = precond
        self.reduced_size_ = setup.size
        self.reduced_method_ = precond.method
        self.timings_ = timings
        self.n_features_in_ = A.n_cols
        return self

    def solve(self, f, return_report=False):
        """Solve ``A x = f`` for the fitted ``A`` starting from ``x = 0``."""
        check_is_fitted(self, "factorization_")
        f = check_vector(f, self.A_.n_rows)
        part = self.partition_
        fp = f[part.perm] if part.perm is not None else f
        Ap = self.permuted_A_
        M = self.preconditioner_
        M.reset_counters()

        t = time.perf_counter()
        try:
            xp, report = bicgstab(
                lambda v: spmv(Ap, v, self.n_jobs), fp,
                eps=self.eps_out, max_iter=self.max_outer, preconditioner=M,
            )
        except MemoryError:
            xp = np.zeros_like(fp)
            report = SolveReport(failure=Failure.F1_OUT_OF_MEMORY)
        solve_time = time.perf_counter() - t

        if part.perm is not None:
            x = np.empty_like(xp)
            x[part.perm] = xp
        else:
            x = xp
        if report.failure is not Failure.F1_OUT_OF_MEMORY:
            res = f - spmv(self.A_, x)
            f_norm = inf_norm(f)
            report.final_relres = inf_norm(res) / f_norm if f_norm > 0 else inf_norm(res)
            report.converged = bool(report.final_relres <= self.eps_out)
            report.failure = Failure.NONE if report.converged else Failure.F2_NO_CONVERGENCE
        report.reduced_size = self.reduced_size_
        report.preconditioner_applications = M.applications
        report.inner_failures = M.inner_failures
        report.inner_iterations_avg = M.inner_iterations / M.applications if M.applications else 0.0
        report.timings = dict(self.timings_, solve=solve_time)
        self.report_ = report
        return (x, report) if return_report else x

    def fit_solve(self, A, f, return_report=False):
        return self.fit(A).solve(f, return_report=return_report)

    def as_preconditioner(self):
        """``P^{-1}`` in the original ordering as a scipy ``LinearOperator``."""
        check_is_fitted(self, "factorization_")
        perm = self.partition_.perm
        M = self.preconditioner_
        n = self.A_.n_rows

        def apply(y):
            y = np.asarray(y, dtype=np.float64).ravel()
            if perm is None:
                return M(y)
            z = np.empty(n)
            z[perm] = M(y[perm])
            return z

        return LinearOperator((n, n), matvec=apply, dtype=np.float64)


def ddps_solve(A, f, **params):
    """One-shot ``DDPSSolver(**params).fit(A).solve(f)``; returns ``(x, report)``."""
    return DDPSSolver(**params).fit(A).solve(f, return_report=True)
