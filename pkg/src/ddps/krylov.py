"""
Right-preconditioned BiCGStab with half-step convergence checks.

The recurrence is the standard one from the Templates book.  Convergence
is tested on ``||r||_inf / ||r_0||_inf`` after each half-step, so a solve
that finishes after the first half of iteration ``k`` reports ``k - 0.5``
iterations.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import DimensionMismatch
from .sparse import CsrMatrix, inf_norm, spmv

__all__ = ["Failure", "KrylovConfig", "SolveReport", "bicgstab", "as_operator"]

BREAKDOWN_TOL = 1e-300


class Failure(str, Enum):
    NONE = "none"
    F1_OUT_OF_MEMORY = "F1"
    F2_NO_CONVERGENCE = "F2"


@dataclass(frozen=True)
class KrylovConfig:
    eps: float = 1e-5
    max_iter: int = 1000
    preconditioner: object = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SolveReport:
    """Outcome of a (DDPS or plain) BiCGStab solve.

    ``final_relres`` is always a freshly computed ``||f - A x|| / ||f||``
    (infinity norm), never the recursively updated residual.
    """

    converged: bool = False
    failure: Failure = Failure.F2_NO_CONVERGENCE
    outer_iterations: float = 0.0
    inner_iterations_avg: float = 0.0
    final_relres: float = float("inf")
    residual_history: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    breakdown: str | None = None
    reduced_size: int = 0
    inner_failures: int = 0
    preconditioner_applications: int = 0

    @property
    def iterations(self):
        return self.outer_iterations

    @property
    def status(self):
        return "OK" if self.converged else self.failure.value

    def to_dict(self):
        return {
            "converged": self.converged,
            "failure": self.failure.value,
            "status": self.status,
            "outer_iterations": self.outer_iterations,
            "inner_iterations_avg": self.inner_iterations_avg,
            "final_relres": self.final_relres,
            "reduced_size": self.reduced_size,
            "inner_failures": self.inner_failures,
            "breakdown": self.breakdown,
            "residual_history": list(self.residual_history),
            "timings": dict(self.timings),
        }


def as_operator(A):
    """Coerce a matrix-like object into a ``v -> A v`` callable."""
    if isinstance(A, CsrMatrix):
        return lambda v: spmv(A, v)
    if callable(A):
        return A
    if hasattr(A, "matvec"):
        return A.matvec
    if isinstance(A, np.ndarray):
        return lambda v: A @ v
    return lambda v: A @ v


def bicgstab(A, f, x0=None, cfg=None, **kwargs):
    """Solve ``A x = f`` with (optionally right-preconditioned) BiCGStab.

    Parameters
    ----------
    A : CsrMatrix, ndarray, LinearOperator or callable
        The operator.
    f : ndarray
        Right-hand side.
    x0 : ndarray, optional
        Initial guess, zero by default.
    cfg : KrylovConfig, optional
        Tolerance, iteration cap and preconditioner; keyword arguments
        ``eps``, ``max_iter`` and ``preconditioner`` override it.

    Returns
    -------
    x : ndarray
        The converged iterate, or the iterate with the smallest recursive
        residual seen when the solve fails.
    report : SolveReport
    """
    cfg = cfg or KrylovConfig()
    if kwargs:
        cfg = KrylovConfig(
            eps=kwargs.pop("eps", cfg.eps),
            max_iter=kwargs.pop("max_iter", cfg.max_iter),
            preconditioner=kwargs.pop("preconditioner", cfg.preconditioner),
        )
        if kwargs:
            raise TypeError(f"unexpected arguments {sorted(kwargs)}")
    matvec = as_operator(A)
    precond = cfg.preconditioner
    M = (lambda v: v.copy()) if precond is None else as_operator(precond)

    f = np.asarray(f, dtype=np.float64)
    n = f.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != f.shape:
        raise DimensionMismatch("x0 does not match the right-hand side")

    report = SolveReport()
    r = f - matvec(x) if x0 is not None else f.copy()
    r0_norm = inf_norm(r)
    f_norm = inf_norm(f)
    report.residual_history.append(1.0 if r0_norm > 0 else 0.0)

    def finish(x, iters):
        report.outer_iterations = float(iters)
        res = f - matvec(x)
        report.final_relres = inf_norm(res) / f_norm if f_norm > 0 else inf_norm(res)
        report.converged = bool(report.final_relres <= cfg.eps)
        report.failure = Failure.NONE if report.converged else Failure.F2_NO_CONVERGENCE
        return x, report

    if r0_norm == 0.0:
        return finish(x, 0)

    r_hat = r.copy()
    rho_prev = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    best_x, best_res = x.copy(), 1.0
    half_steps = 0

    for it in range(1, cfg.max_iter + 1):
        rho = float(r_hat @ r)
        if abs(rho) < BREAKDOWN_TOL:
            report.breakdown = "rho"
            break
        if it == 1:
            p = r.copy()
        else:
            beta = (rho / rho_prev) * (alpha / omega)
            p = r + beta * (p - omega * v)
        p_hat = M(p)
        v = matvec(p_hat)
        denom = float(r_hat @ v)
        if abs(denom) < BREAKDOWN_TOL:
            report.breakdown = "r_hat.v"
            break
        alpha = rho / denom
        s = r - alpha * v
        x = x + alpha * p_hat
        half_steps += 1
        rel = inf_norm(s) / r0_norm
        report.residual_history.append(rel)
        if rel < best_res:
            best_x, best_res = x.copy(), rel
        if rel <= cfg.eps:
            return finish(x, half_steps / 2)

        s_hat = M(s)
        t = matvec(s_hat)
        tt = float(t @ t)
        if tt < BREAKDOWN_TOL:
            report.breakdown = "t.t"
            break
        omega = float(t @ s) / tt
        if abs(omega) < BREAKDOWN_TOL:
            report.breakdown = "omega"
            break
        x = x + omega * s_hat
        r = s - omega * t
        half_steps += 1
        rel = inf_norm(r) / r0_norm
        report.residual_history.append(rel)
        if rel < best_res:
            best_x, best_res = x.copy(), rel
        if rel <= cfg.eps:
            return finish(x, half_steps / 2)
        rho_prev = rho

    return finish(best_x, half_steps / 2)
