import numpy as np
import pytest
import scipy.sparse as sps

from ddps import CsrMatrix, Partition, SingularBlock, factorize, partition_contiguous, solve_blocks, split
from ddps.block_factor import BlockSplit

from .conftest import WORKED_G_RHS


def test_split_worked_example(worked_A, worked_dense):
    s = split(worked_A, partition_contiguous(9, 3))
    for i, blk in enumerate(s.blocks):
        np.testing.assert_array_equal(blk.toarray(), worked_dense[3 * i:3 * i + 3, 3 * i:3 * i + 3])
    R = s.R.toarray()
    assert s.R.nnz == 6
    assert sorted(s.R.values.tolist()) == sorted([0.01, -0.01, 0.3, -0.2, 1.1, 1.2])
    for i in range(3):
        assert not R[3 * i:3 * i + 3, 3 * i:3 * i + 3].any()
    assert s.reassemble() == worked_A


def test_split_single_partition(worked_A):
    s = split(worked_A, partition_contiguous(9, 1))
    assert s.blocks[0] == worked_A
    assert s.R.nnz == 0


def test_split_block_diagonal():
    a = sps.block_diag([np.ones((2, 2)), 2 * np.ones((3, 3))]).toarray()
    s = split(CsrMatrix.from_dense(a), partition_contiguous(5, 2))
    assert s.R.nnz == 4  # 3|2 split cuts the 2|3 structure
    s = split(CsrMatrix.from_dense(a), Partition(np.array([0, 2, 5])))
    assert s.R.nnz == 0


@pytest.mark.parametrize("seed", range(4))
def test_split_round_trip_exact(seed):
    rng = np.random.default_rng(seed)
    A = CsrMatrix.from_scipy(sps.random(30, 30, density=0.2, random_state=rng))
    s = split(A, partition_contiguous(30, 4))
    assert s.reassemble() == A


def test_factorize_worked_example_first_block(worked_A):
    F = factorize(split(worked_A, partition_contiguous(9, 3)))
    g = F.factors[0].solve(np.ones(3))
    np.testing.assert_allclose(g, [-2, 3.4, 2], atol=1e-12)


def test_factorize_identity_block():
    F = factorize(split(CsrMatrix.identity(3), partition_contiguous(3, 1)))
    lu = F.factors[0]
    np.testing.assert_array_equal(lu.L, np.eye(3))
    np.testing.assert_array_equal(lu.U, np.eye(3))
    np.testing.assert_array_equal(lu.perm, np.arange(3))


def test_factorize_needs_pivoting():
    A = CsrMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    F = factorize(split(A, partition_contiguous(2, 1)))
    lu = F.factors[0]
    np.testing.assert_array_equal(lu.perm, [1, 0])
    np.testing.assert_allclose(lu.solve(np.array([3.0, 5.0])), [5.0, 3.0])


@pytest.mark.parametrize("n", [5, 50, 200])
def test_lu_reconstruction(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n)) + n ** 0.5 * np.eye(n)
    F = factorize(split(CsrMatrix.from_dense(a), partition_contiguous(n, 1)))
    lu = F.factors[0]
    assert np.all(np.abs(lu.L) <= 1.0)
    err = np.max(np.abs(a[lu.perm] - lu.L @ lu.U))
    assert err <= 1e-12 * np.max(np.sum(np.abs(a), axis=1))


def test_singular_block_reported():
    a = np.array([[1.0, 2.0, 0], [2.0, 4.0, 0], [0, 0, 1.0]])
    s = split(CsrMatrix.from_dense(a), partition_contiguous(3, 2))
    with pytest.raises(SingularBlock) as exc:
        factorize(s)
    assert exc.value.block == 0


def test_singular_block_perturbed():
    a = np.array([[1.0, 2.0, 0], [2.0, 4.0, 0], [0, 0, 1.0]])
    s = split(CsrMatrix.from_dense(a), partition_contiguous(3, 2))
    F = factorize(s, perturb=1e-8)
    assert F.factors[0].perturbed and not F.factors[1].perturbed


def test_zero_block_cannot_be_perturbed():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    s = split(CsrMatrix.from_dense(a), partition_contiguous(2, 2))
    with pytest.raises(SingularBlock):
        factorize(s, perturb=1e-3)


def test_solve_blocks_worked_example(worked_A):
    F = factorize(split(worked_A, partition_contiguous(9, 3)))
    np.testing.assert_allclose(solve_blocks(F, np.ones(9)), WORKED_G_RHS, atol=1e-3)


def test_solve_blocks_identity():
    F = factorize(split(CsrMatrix.identity(6), partition_contiguous(6, 3)))
    y = np.arange(6.0)
    np.testing.assert_array_equal(solve_blocks(F, y), y)


def test_solve_blocks_dense_oracle():
    rng = np.random.default_rng(11)
    blocks = [rng.standard_normal((k, k)) + 3 * np.eye(k) for k in (7, 7, 6)]
    a = sps.block_diag(blocks).toarray()
    y = rng.standard_normal(20)
    F = factorize(split(CsrMatrix.from_dense(a), partition_contiguous(20, 3)))
    np.testing.assert_allclose(solve_blocks(F, y), np.linalg.solve(a, y), rtol=0, atol=1e-12)


def test_solve_blocks_inverts_blocks():
    rng = np.random.default_rng(5)
    n = 60
    a = rng.standard_normal((n, n)) + 6 * np.eye(n)
    part = partition_contiguous(n, 4)
    s = split(CsrMatrix.from_dense(a), part)
    F = factorize(s)
    x = rng.standard_normal(n)
    D = sps.block_diag([b.to_scipy() for b in s.blocks]).toarray()
    got = solve_blocks(F, D @ x)
    assert np.max(np.abs(got - x)) <= 1e-10 * np.max(np.abs(x))


def test_factorize_workers_bitwise():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((80, 80)) + 9 * np.eye(80)
    s = split(CsrMatrix.from_dense(a), partition_contiguous(80, 8))
    y = rng.standard_normal(80)
    F1, F8 = factorize(s, workers=1), factorize(s, workers=8)
    for f1, f8 in zip(F1.factors, F8.factors):
        assert np.array_equal(f1.lu, f8.lu)
    assert np.array_equal(solve_blocks(F1, y, 1), solve_blocks(F8, y, 8))


def test_blocksplit_is_plain_data(worked_A):
    s = split(worked_A, partition_contiguous(9, 3))
    assert isinstance(s, BlockSplit) and s.n == 9
