"""Hybrid direct/iterative sparse solver: block LU on a block-row partition
plus a small reduced system, wrapped in an outer BiCGStab iteration."""
from .block_factor import BlockFactorization, BlockSplit, factorize, solve_blocks, split
from .exceptions import (
    BadPartVector,
    DDPSError,
    DimensionMismatch,
    InvalidPartCount,
    NotSquare,
    ParseError,
    ReducedSingular,
    SingularBlock,
    UnsupportedField,
)
from .krylov import Failure, KrylovConfig, SolveReport, bicgstab
from .mmio import read_matrix_market, read_vector, write_matrix_market, write_vector
from .partition import (
    Partition,
    apply_permutation,
    partition_bisection,
    partition_contiguous,
    read_partition_file,
    symmetrize_pattern,
)
from .reduced import (
    DDPSPreconditioner,
    DropConfig,
    ReducedSetup,
    apply_preconditioner,
    assemble_Ghat,
    compute_G,
    drop_columns,
    solve_reduced,
)
from .solver import DDPSSolver, ddps_solve
from .sparse import CsrMatrix, compute_diag_dominance, dense_gemv, inf_norm, spmv

__version__ = "0.1.0"
