"""Command-line driver: ``ddps --matrix A.mtx [options]``.

Exit status: 0 converged, 1 no convergence (F2), 2 bad usage,
3 unreadable input, 4 singular block or reduced system, 5 out of memory (F1).
"""
import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from .exceptions import BadPartVector, ParseError, ReducedSingular, SingularBlock
from .krylov import Failure
from .mmio import read_matrix_market, read_vector
from .solver import DDPSSolver
from .sparse import compute_diag_dominance, inf_norm, spmv

EXIT_OK = 0
EXIT_F2 = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_SINGULAR = 4
EXIT_F1 = 5

SWEEP_COLUMNS = [
    "matrix", "n", "nnz", "p", "delta", "outer_iters", "inner_iters_avg",
    "relres", "status", "setup_s", "solve_s",
]

log = logging.getLogger("ddps")


def _float_list(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _int_list(text):
    return [int(t) for t in text.replace(",", " ").split()]


def build_parser():
    ap = argparse.ArgumentParser(
        prog="ddps",
        description="Solve a sparse linear system with the block-LU / reduced-system hybrid solver.",
    )
    ap.add_argument("--matrix", required=True, help="Matrix Market file holding A")
    rhs = ap.add_mutually_exclusive_group()
    rhs.add_argument("--rhs", help="Matrix Market file holding f (n x 1 array)")
    rhs.add_argument("--rhs-ones", action="store_true",
                     help="use f = A * ones (the default when --rhs is absent)")
    ap.add_argument("--partitions", type=int, default=2)
    ap.add_argument("--partitioner", choices=["contiguous", "bisection", "file"], default="contiguous")
    ap.add_argument("--partition-file", help="part-id file (one 0-based id per row)")
    ap.add_argument("--delta", type=float, default=0.9)
    ap.add_argument("--eps-out", type=float, default=1e-5)
    ap.add_argument("--eps-in", type=float, default=1e-4)
    ap.add_argument("--max-outer", type=int, default=1000)
    ap.add_argument("--max-inner", type=int, default=100)
    ap.add_argument("--reduced", choices=["auto", "direct", "iterative"], default="auto")
    ap.add_argument("--perturb", type=float, default=None,
                    help="relative diagonal shift applied once to a singular block")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--output", choices=["text", "csv", "json"], default="text")
    ap.add_argument("--sweep-p", type=_int_list, default=None,
                    help="comma-separated partition counts; enables sweep mode")
    ap.add_argument("--sweep-delta", type=_float_list, default=None,
                    help="comma-separated drop tolerances; enables sweep mode")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _solver_params(args, p=None, delta=None):
    return dict(
        partitions=args.partitions if p is None else p,
        partitioner=args.partitioner,
        partition_file=args.partition_file,
        delta=args.delta if delta is None else delta,
        eps_out=args.eps_out,
        eps_in=args.eps_in,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        reduced=args.reduced,
        perturb=args.perturb,
        n_jobs=args.threads,
    )


def run_single(A, f, params, matrix_name="", ones_solution=False, dd=None):
    """Fit and solve once; returns a flat report dictionary."""
    solver = DDPSSolver(**params)
    solver.fit(A)
    x, rep = solver.solve(f, return_report=True)
    row = {
        "matrix": matrix_name,
        "n": A.n_rows,
        "nnz": A.nnz,
        "dd": compute_diag_dominance(A) if dd is None else dd,
        "p": params["partitions"],
        "partitioner": params["partitioner"],
        "delta": params["delta"],
        "reduced_size": rep.reduced_size,
        "reduced_method": solver.reduced_method_,
        "outer_iterations": rep.outer_iterations,
        "inner_iterations_avg": rep.inner_iterations_avg,
        "final_relres": rep.final_relres,
        "status": rep.status,
        "converged": rep.converged,
        "breakdown": rep.breakdown or "",
    }
    if ones_solution:
        row["error_vs_ones"] = inf_norm(x - 1.0)
    for stage, secs in rep.timings.items():
        row[f"time_{stage}"] = secs
    row["setup_s"] = sum(v for k, v in rep.timings.items() if k != "solve")
    row["solve_s"] = rep.timings.get("solve", 0.0)
    return row, x, rep


def sweep(A, f, ps, deltas, base_params, matrix_name=""):
    """Run every ``(p, delta)`` grid point; failures become rows, not exceptions."""
    rows = []
    for p in ps:
        for delta in deltas:
            params = dict(base_params, partitions=p, delta=delta)
            row = {"matrix": matrix_name, "n": A.n_rows, "nnz": A.nnz, "p": p, "delta": delta}
            try:
                full, _, _ = run_single(A, f, params, matrix_name, dd=0.0)
                row.update(
                    outer_iters=full["outer_iterations"],
                    inner_iters_avg=full["inner_iterations_avg"],
                    relres=full["final_relres"],
                    status=full["status"],
                    setup_s=full["setup_s"],
                    solve_s=full["solve_s"],
                )
            except MemoryError:
                row.update(status=Failure.F1_OUT_OF_MEMORY.value)
            except SingularBlock as exc:
                log.warning("p=%s delta=%s: %s", p, delta, exc)
                row.update(status="SINGULAR_BLOCK")
            except ReducedSingular as exc:
                log.warning("p=%s delta=%s: %s", p, delta, exc)
                row.update(status="SINGULAR_REDUCED")
            except (ValueError, ArithmeticError) as exc:
                log.warning("p=%s delta=%s: %s", p, delta, exc)
                row.update(status="ERROR")
            rows.append({k: row.get(k, "") for k in SWEEP_COLUMNS})
    return rows


def format_csv(rows, columns=None):
    columns = columns or (list(rows[0]) if rows else SWEEP_COLUMNS)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def format_text(row):
    width = max(len(k) for k in row)
    return "".join(f"{k:<{width}}  {_fmt(v)}\n" for k, v in row.items())


def format_json(obj):
    return json.dumps(obj, indent=2) + "\n"


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.partitioner == "file" and not args.partition_file:
        print("ddps: --partitioner file needs --partition-file", file=sys.stderr)
        return EXIT_USAGE

    try:
        A = read_matrix_market(args.matrix)
        if args.rhs:
            f = read_vector(args.rhs)
            ones_solution = False
        else:
            f = spmv(A, np.ones(A.n_cols))
            ones_solution = True
    except (OSError, ParseError) as exc:
        print(f"ddps: {exc}", file=sys.stderr)
        return EXIT_INPUT
    name = os.path.basename(args.matrix)

    if args.sweep_p is not None or args.sweep_delta is not None:
        ps = args.sweep_p if args.sweep_p is not None else [args.partitions]
        deltas = args.sweep_delta if args.sweep_delta is not None else [args.delta]
        rows = sweep(A, f, ps, deltas, _solver_params(args), name)
        if args.output == "json":
            sys.stdout.write(format_json(rows))
        else:
            sys.stdout.write(format_csv(rows, SWEEP_COLUMNS))
        return EXIT_OK if all(r["status"] == "OK" for r in rows) else EXIT_F2

    try:
        row, _, rep = run_single(A, f, _solver_params(args), name, ones_solution)
    except (SingularBlock, ReducedSingular) as exc:
        print(f"ddps: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (BadPartVector, OSError) as exc:
        print(f"ddps: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"ddps: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.output == "json":
        sys.stdout.write(format_json(row))
    elif args.output == "csv":
        sys.stdout.write(format_csv([row]))
    else:
        sys.stdout.write(format_text(row))
    if rep.converged:
        return EXIT_OK
    return EXIT_F1 if rep.failure is Failure.F1_OUT_OF_MEMORY else EXIT_F2


if __name__ == "__main__":
    sys.exit(main())
