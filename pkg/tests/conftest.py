import numpy as np
import pytest
import scipy.sparse as sps

from ddps import CsrMatrix

# Worked example: 9 unknowns, three 3x3 diagonal blocks.
WORKED_A = np.array([
    [0.2, 1.0, -1, 0, 0.01, 0, 0, 0, -0.01],
    [0.01, 0.3, 0, 0, 0, 0, 0, 0, 0],
    [-0.1, 0, 0.4, 0, 0.3, 0, 0, 0, 0],
    [0, 0, 0, 0.3, 0.6, 2, 0, 0, 0],
    [0, -0.2, 0, 0, 0.4, 0, 0, 0, 1.1],
    [0, 0, 0, -0.2, 0.1, 0.5, 0, 0, 0],
    [1.2, 0, 0, 0, 0, 0, 0.4, 0.02, 3.0],
    [0, 0, 0, 0, 0, 0, 2.0, 0.5, 0],
    [0, 0, 0, 0, 0, 0, 0, 0.1, 0.6],
])
WORKED_G_RHS = np.array([-2, 3.4, 2, -3.1818, 2.5, 0.2273, -1.3103, 7.2414, 0.4598])
WORKED_X = np.array([-3.2389, 3.4413, 1.7766, -2.7063, -0.1151, 0.9405, 0.365, 0.5402, 1.5766])
WORKED_ZHAT = np.array([-3.2389, 3.4413, -0.1151, 1.5766])


def random_system(seed, n, density=None, shift=1.0):
    """Random sparse matrix, diagonal shifted to strict row dominance.

    ``shift`` scales the off-diagonal row sum added to the diagonal; at
    ``shift >= 1`` the matrix is strictly diagonally dominant and hence
    nonsingular.
    """
    rng = np.random.default_rng(seed)
    density = 5.0 / n if density is None else density
    A = sps.random(n, n, density=density, random_state=rng,
                   data_rvs=rng.standard_normal, format="csr")
    A.setdiag(0)
    A.eliminate_zeros()
    rs = np.asarray(abs(A).sum(axis=1)).ravel()
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    A = A + sps.diags(sign * (shift * rs + 1.0))
    return CsrMatrix.from_scipy(A)


def corpus(count=20, lo=50, hi=400):
    sizes = np.linspace(lo, hi, count).astype(int)
    return [(k, int(n), random_system(k, int(n))) for k, n in enumerate(sizes)]


@pytest.fixture
def worked_A():
    return CsrMatrix.from_dense(WORKED_A)


@pytest.fixture
def worked_dense():
    return WORKED_A.copy()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
