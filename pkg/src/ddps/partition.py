"""Block-row partitions and the reorderings that produce them.

A :class:`Partition` splits ``0..n`` into ``p`` consecutive ranges.  When a
reordering was applied, ``perm[new] = old`` maps the rows of the permuted
system back to the original numbering.
"""
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components

from .exceptions import BadPartVector, DimensionMismatch, InvalidPartCount, NotSquare
from .sparse import CsrMatrix

__all__ = [
    "Partition",
    "symmetrize_pattern",
    "partition_contiguous",
    "partition_bisection",
    "read_partition_file",
    "apply_permutation",
    "edge_cut",
]


@dataclass(frozen=True, eq=False)
class Partition:
    boundaries: np.ndarray
    perm: np.ndarray | None = None
    inv_perm: np.ndarray | None = field(default=None)

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=np.int64)
        if b.ndim != 1 or len(b) < 2 or b[0] != 0 or np.any(np.diff(b) <= 0):
            raise InvalidPartCount(f"boundaries must increase strictly from 0: {b.tolist()}")
        object.__setattr__(self, "boundaries", b)
        if self.perm is not None:
            perm = np.asarray(self.perm, dtype=np.int64)
            n = int(b[-1])
            if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
                raise ValueError("perm is not a permutation of 0..n-1")
            inv = np.empty_like(perm)
            inv[perm] = np.arange(n)
            if self.inv_perm is not None and not np.array_equal(self.inv_perm, inv):
                raise ValueError("inv_perm is not the inverse of perm")
            object.__setattr__(self, "perm", perm)
            object.__setattr__(self, "inv_perm", inv)

    @property
    def p(self):
        return len(self.boundaries) - 1

    @property
    def n(self):
        return int(self.boundaries[-1])

    @property
    def sizes(self):
        return np.diff(self.boundaries)

    def ranges(self):
        b = self.boundaries
        return [(int(b[i]), int(b[i + 1])) for i in range(self.p)]

    def part_ids(self):
        """Part id of every row in the (permuted) ordering."""
        return np.repeat(np.arange(self.p), self.sizes)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        same_perm = (self.perm is None and other.perm is None) or (
            self.perm is not None and other.perm is not None
            and np.array_equal(self.perm, other.perm)
        )
        return np.array_equal(self.boundaries, other.boundaries) and same_perm


def symmetrize_pattern(A):
    """Return ``(|A| + |A^T|) / 2``, the undirected graph handed to the partitioner."""
    if A.n_rows != A.n_cols:
        raise NotSquare("symmetrize_pattern needs a square matrix")
    a = abs(A.to_scipy())
    return CsrMatrix.from_scipy((a + a.T) * 0.5)


def partition_contiguous(n, p):
    """Near-equal consecutive blocks, larger blocks first."""
    n, p = int(n), int(p)
    if p < 1 or p > n:
        raise InvalidPartCount(f"need 1 <= p <= n, got p={p}, n={n}")
    q, r = divmod(n, p)
    sizes = np.full(p, q, dtype=np.int64)
    sizes[:r] += 1
    return Partition(np.concatenate([[0], np.cumsum(sizes)]))


# ----------------------------------------------------------------------
# recursive level-set bisection


def _bfs_levels(indptr, indices, start, mask):
    """BFS restricted to ``mask``; returns (order, level) for reached vertices."""
    level = {start: 0}
    order = [start]
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in indices[indptr[v]:indptr[v + 1]]:
            w = int(w)
            if mask[w] and w not in level:
                level[w] = level[v] + 1
                order.append(w)
                queue.append(w)
    return order, level


def _pseudo_peripheral(indptr, indices, comp, mask):
    """George-Liu style search for a vertex of (near) maximal eccentricity."""
    degree = {v: int(np.count_nonzero(mask[indices[indptr[v]:indptr[v + 1]]])) for v in comp}
    v = min(comp)
    order, level = _bfs_levels(indptr, indices, v, mask)
    ecc = level[order[-1]]
    while True:
        last = [w for w in order if level[w] == ecc]
        u = min(last, key=lambda w: (degree[w], w))
        order_u, level_u = _bfs_levels(indptr, indices, u, mask)
        ecc_u = level_u[order_u[-1]]
        if ecc_u <= ecc:
            return v, order, level
        v, order, level, ecc = u, order_u, level_u, ecc_u


def _level_order(indptr, indices, comp, mask):
    _, order, level = _pseudo_peripheral(indptr, indices, comp, mask)
    # stable sort by level keeps BFS discovery order inside a level
    return sorted(order, key=lambda w: level[w])


def _bisect(indptr, indices, verts, n_left, n_total):
    """Split ``verts`` into (left, right) with ``len(left) == n_left``."""
    mask = np.zeros(n_total, dtype=bool)
    mask[verts] = True
    sub = sps.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n_total, n_total))
    sub = sub[verts][:, verts]
    n_comp, labels = connected_components(sub, directed=False)
    comps = [sorted(np.asarray(verts)[labels == k].tolist()) for k in range(n_comp)]
    comps.sort(key=lambda c: c[0])

    target = [n_left, len(verts) - n_left]
    sides = [[], []]
    leftover = []
    for comp in comps:
        room = [target[s] - len(sides[s]) for s in (0, 1)]
        # lighter side = smaller filled fraction; ties go left
        fill = [len(sides[s]) / target[s] for s in (0, 1)]
        order = (0, 1) if fill[0] <= fill[1] else (1, 0)
        for s in order:
            if len(comp) <= room[s]:
                sides[s].extend(comp)
                break
        else:
            leftover.append(comp)

    for comp in leftover:
        ordered = _level_order(indptr, indices, comp, mask)
        room = target[0] - len(sides[0])
        sides[0].extend(ordered[:room])
        sides[1].extend(ordered[room:])
    return sides[0], sides[1]


def partition_bisection(S, p):
    """Recursive BFS level-set bisection of a structurally symmetric graph.

    Each split orders a connected piece by BFS level from a
    pseudo-peripheral vertex and cuts at the size target, which places the
    cut inside the median level.  For ``p`` not a power of two the split
    sizes follow ``floor(k/2) : ceil(k/2)``.

    Returns
    -------
    Partition
        With ``perm`` grouping each part's vertices consecutively.
    """
    n = S.n_rows
    if S.n_rows != S.n_cols:
        raise NotSquare("graph matrix must be square")
    p = int(p)
    if p < 1 or p > n:
        raise InvalidPartCount(f"need 1 <= p <= n, got p={p}, n={n}")
    if p == 1:
        return Partition(np.array([0, n]), perm=np.arange(n))

    indptr = np.asarray(S.row_ptr)
    indices = np.asarray(S.col_idx)
    parts = []

    def recurse(verts, k):
        if k == 1:
            parts.append(sorted(verts))
            return
        kl = k // 2
        kr = k - kl
        n_left = int(round(len(verts) * kl / k))
        n_left = min(max(n_left, kl), len(verts) - kr)
        left, right = _bisect(indptr, indices, verts, n_left, n)
        recurse(left, kl)
        recurse(right, kr)

    recurse(list(range(n)), p)
    sizes = [len(q) for q in parts]
    perm = np.concatenate([np.asarray(q, dtype=np.int64) for q in parts])
    return Partition(np.concatenate([[0], np.cumsum(sizes)]), perm=perm)


def edge_cut(S, part):
    """Number of undirected edges of ``S`` whose endpoints lie in different parts."""
    ids = np.empty(part.n, dtype=np.int64)
    order = part.perm if part.perm is not None else np.arange(part.n)
    ids[order] = part.part_ids()
    coo = S.to_scipy().tocoo()
    off = coo.row < coo.col
    return int(np.count_nonzero(ids[coo.row[off]] != ids[coo.col[off]]))


def read_partition_file(path, n):
    """Build a partition from a METIS-style part vector (one 0-based id per row)."""
    try:
        ids = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except ValueError as exc:
        raise BadPartVector(f"{path}: {exc}") from exc
    return partition_from_part_vector(ids, n)


def partition_from_part_vector(ids, n):
    ids = np.asarray(ids).ravel()
    if ids.shape != (n,):
        raise BadPartVector(f"part vector has {ids.size} entries, expected {n}")
    if n == 0 or ids.min() < 0:
        raise BadPartVector("part ids must be non-negative")
    p = int(ids.max()) + 1
    counts = np.bincount(ids, minlength=p)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise BadPartVector(f"part ids {missing} never occur")
    perm = np.argsort(ids, kind="stable")
    return Partition(np.concatenate([[0], np.cumsum(counts)]), perm=perm)


def apply_permutation(A, f, part):
    """Return ``(P A P^T, P f)`` where row ``i`` of the result is row ``perm[i]``."""
    if A.n_rows != A.n_cols or A.n_rows != part.n:
        raise DimensionMismatch("matrix does not match partition size")
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (A.n_rows,):
        raise DimensionMismatch("right-hand side does not match matrix")
    if part.perm is None:
        return A, f.copy()
    perm = part.perm
    a = A.to_scipy()[perm][:, perm]
    return CsrMatrix.from_scipy(a), f[perm]
