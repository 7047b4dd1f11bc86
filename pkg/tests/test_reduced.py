import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st

from ddps import (CsrMatrix, DropConfig, ReducedSetup, apply_preconditioner, assemble_Ghat, compute_G,
                  drop_columns, factorize, partition_contiguous, solve_blocks, solve_reduced, split)

from .conftest import WORKED_X, WORKED_ZHAT, random_system


def setup_for(A, p, delta=0.0):
    part = partition_contiguous(A.n_rows, p)
    s = split(A, part)
    F = factorize(s)
    Rt = drop_columns(s, DropConfig(delta))
    setup = compute_G(F, Rt, part)
    assemble_Ghat(setup)
    return part, s, F, Rt, setup


def kept_columns(Rt, part):
    R = Rt.to_scipy()
    return [sorted((np.unique(R[a:b].indices) + 1).tolist()) for a, b in part.ranges()]


def dense_G(s, Rt):
    """Independent oracle: G = D^{-1} R~ with a dense block-diagonal D."""
    D = sps.block_diag([b.to_scipy() for b in s.blocks]).toarray()
    return np.linalg.solve(D, Rt.toarray())


def test_drop_none_at_zero(worked_A):
    part, s, _, Rt, _ = setup_for(worked_A, 3, 0.0)
    assert Rt == s.R
    assert kept_columns(Rt, part) == [[5, 9], [2, 9], [1]]


def test_drop_all_but_max_at_one(worked_A):
    part, _, _, Rt, _ = setup_for(worked_A, 3, 1.0)
    # block 1 column norms: col 5 -> 0.3, col 9 -> 0.01
    assert kept_columns(Rt, part)[0] == [5]
    assert kept_columns(Rt, part) == [[5], [9], [1]]


def test_drop_empty_remainder(worked_A):
    _, s, _, Rt, setup = setup_for(worked_A, 1, 0.5)
    assert s.R.nnz == 0 and Rt.nnz == 0
    assert setup.size == 0


def test_drop_config_range():
    with pytest.raises(ValueError):
        DropConfig(1.5)


def test_compute_G_worked_example(worked_A):
    _, s, _, Rt, setup = setup_for(worked_A, 3)
    assert (setup.c + 1).tolist() == [1, 2, 5, 9]
    G = setup.G_dense()
    np.testing.assert_allclose(G[0:3, 4], [-9.12, 0.304, -1.53], atol=1e-3)
    np.testing.assert_allclose(G[6:9, 0], [0.5172, -2.069, 0.3448], atol=1e-3)
    # the published tables disagree on the sign at (2, 9); the dense oracle settles it
    oracle = dense_G(s, Rt)
    assert oracle[1, 8] == pytest.approx(-0.004, abs=1e-12)
    assert G[1, 8] == pytest.approx(oracle[1, 8], abs=1e-15)
    np.testing.assert_allclose(G, oracle, atol=1e-12)


def test_ghat_worked_example(worked_A):
    *_, setup = setup_for(worked_A, 3)
    Ghat = setup.Ghat
    np.testing.assert_allclose(Ghat[0], [1, 0, -9.12, 0.12], atol=1e-3)
    np.testing.assert_allclose(Ghat[1], [0, 1, 0.304, -0.004], atol=1e-12)
    np.testing.assert_allclose(Ghat[2], [0, -0.5, 1, 2.75], atol=1e-3)
    np.testing.assert_allclose(Ghat[3], [0.3448, 0, 0, 1], atol=1e-3)


def test_ghat_trivial():
    empty = ReducedSetup(c=np.zeros(0, dtype=np.int64), G_cols=[np.zeros((3, 0))], boundaries=np.array([0, 3]))
    assert assemble_Ghat(empty).shape == (0, 0)
    zero = ReducedSetup(c=np.array([0, 2]), G_cols=[np.zeros((2, 2)), np.zeros((1, 2))],
                        boundaries=np.array([0, 2, 3]))
    np.testing.assert_array_equal(assemble_Ghat(zero), np.eye(2))


def test_solve_reduced_worked_example(worked_A):
    *_, F, _, setup = setup_for(worked_A, 3)
    ghat = np.array([-2, 3.4, 2.5, 0.4598])
    z, iters, ok = solve_reduced(setup, ghat, "direct")
    np.testing.assert_allclose(z, WORKED_ZHAT, atol=1e-3)
    assert ok and iters == 0
    zi, iters, ok = solve_reduced(setup, ghat, "iterative", eps_in=1e-10, max_inner=100)
    np.testing.assert_allclose(zi, WORKED_ZHAT, atol=1e-3)
    assert ok and iters > 0


def test_solve_reduced_identity():
    setup = ReducedSetup(c=np.array([0, 1, 2]), G_cols=[np.zeros((3, 3))], boundaries=np.array([0, 3]))
    assemble_Ghat(setup)
    g = np.array([1.0, -2.0, 3.0])
    z, iters, _ = solve_reduced(setup, g, "direct")
    np.testing.assert_array_equal(z, g)
    z, iters, _ = solve_reduced(setup, g, "iterative")
    np.testing.assert_array_equal(z, g)
    assert iters <= 0.5


@pytest.mark.parametrize("seed", range(3))
def test_solve_reduced_iterative_vs_direct(seed):
    rng = np.random.default_rng(seed)
    k = 30
    M = rng.standard_normal((k, k)) * 0.3 / k ** 0.5
    setup = ReducedSetup(c=np.arange(k), G_cols=[M], boundaries=np.array([0, k]))
    assemble_Ghat(setup)
    g = rng.standard_normal(k)
    zd, _, _ = solve_reduced(setup, g, "direct")
    eps_in = 1e-4
    zi, _, ok = solve_reduced(setup, g, "iterative", eps_in=eps_in, max_inner=100)
    assert ok
    assert np.max(np.abs(zi - zd)) <= eps_in * 10 * np.max(np.abs(zd))


def test_apply_preconditioner_worked_example(worked_A):
    *_, F, _, setup = setup_for(worked_A, 3)
    z = apply_preconditioner(F, setup, np.ones(9), method="direct")
    np.testing.assert_allclose(z, WORKED_X, atol=1e-3)


def test_apply_preconditioner_single_partition(worked_A, worked_dense):
    *_, F, _, setup = setup_for(worked_A, 1)
    y = np.arange(1.0, 10.0)
    np.testing.assert_allclose(apply_preconditioner(F, setup, y), np.linalg.solve(worked_dense, y),
                               rtol=0, atol=1e-12)


def test_apply_preconditioner_zero(worked_A):
    *_, F, _, setup = setup_for(worked_A, 3, 0.5)
    np.testing.assert_array_equal(apply_preconditioner(F, setup, np.zeros(9)), np.zeros(9))


@pytest.mark.parametrize("n,p", [(40, 2), (120, 4), (200, 8)])
def test_direct_mode_solves_system(n, p):
    A = random_system(n + p, n, shift=0.2)
    rng = np.random.default_rng(p)
    f = rng.standard_normal(n)
    *_, F, _, setup = setup_for(A, p, 0.0)
    z = apply_preconditioner(F, setup, f, method="direct")
    relres = np.max(np.abs(f - A.toarray() @ z)) / np.max(np.abs(f))
    assert relres <= 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_G_columns_match_block_solves(seed):
    A = random_system(seed, 50)
    part, s, F, Rt, setup = setup_for(A, 4, 0.3)
    G = setup.G_dense()
    D = sps.block_diag([b.to_scipy() for b in s.blocks]).toarray()
    R = Rt.toarray()
    for j in setup.c:
        np.testing.assert_allclose(G[:, j], np.linalg.solve(D, R[:, j]), rtol=0, atol=1e-12)
    outside = np.setdiff1d(np.arange(50), setup.c)
    assert not G[:, outside].any()


@pytest.mark.parametrize("seed", range(3))
def test_recovery_identity_and_reduced_closure(seed):
    A = random_system(100 + seed, 60)
    part, s, F, Rt, setup = setup_for(A, 3, 0.0)
    y = np.random.default_rng(seed).standard_normal(60)
    z = apply_preconditioner(F, setup, y, method="direct")
    g = solve_blocks(F, y)
    G = dense_G(s, Rt)
    # step 6.5 recomputation identity
    np.testing.assert_allclose(z, g - G @ z, rtol=0, atol=1e-12)
    # the c-rows of (I + G) z = g only involve z(c)
    c = setup.c
    zc = np.linalg.solve(np.eye(len(c)) + G[np.ix_(c, c)], g[c])
    full = np.linalg.solve(np.eye(60) + G, g)
    np.testing.assert_allclose(zc, full[c], rtol=0, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4, 6]))
def test_reduced_size_monotone_in_delta(seed, p):
    A = random_system(seed, 48)
    part = partition_contiguous(48, p)
    s = split(A, part)
    F = factorize(s)
    sizes = [compute_G(F, drop_columns(s, d), part).size for d in (0, 0.1, 0.3, 0.6, 0.9, 0.99, 1.0)]
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))


def test_compute_G_workers_bitwise(worked_A):
    part = partition_contiguous(9, 3)
    s = split(worked_A, part)
    F = factorize(s)
    Rt = drop_columns(s, 0.0)
    s1, s8 = compute_G(F, Rt, part, workers=1), compute_G(F, Rt, part, workers=8)
    for a, b in zip(s1.G_cols, s8.G_cols):
        assert np.array_equal(a, b)
