"""Immutable sparse containers for the similarity graph and the triangle tensor.

The graph is stored as a symmetric CSR adjacency.  The third-order tensor is
stored as a list of unordered triples ``i < j < k`` with weights; the dense
tensor it represents is the fully symmetric one, i.e. ``A[p] = tau`` for all six
permutations ``p`` of each triple.  Under that convention

* hyper-degree  ``delta_i = sum_jk A_ijk = 2 * sum_{t ∋ i} tau_t``
* pair weight   ``B_ij = sum_k A_kij = sum_{t ⊇ {i,j}} tau_t``  (i != j)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriple, InvalidNode, InvalidWeight, IsolatedNode, ShapeError

__all__ = [
    "SparseGraph",
    "TriangleTensor",
    "PairWeightMatrix",
    "CoverageReport",
    "build_graph",
    "build_triangle_tensor",
    "pair_weights",
    "validate_coverage",
]


def _as_records(records, width):
    arr = np.asarray(records, dtype=float)
    if arr.size == 0:
        return np.zeros((0, width))
    if arr.ndim != 2 or arr.shape[1] not in (width - 1, width):
        raise ShapeError(f"expected records with {width - 1} or {width} columns, got shape {arr.shape}")
    if arr.shape[1] == width - 1:
        arr = np.column_stack([arr, np.ones(len(arr))])
    return arr


def _as_ids(col, n):
    if not np.all(np.isfinite(col)) or np.any(col != np.round(col)):
        raise InvalidNode("node ids must be integers")
    ids = col.astype(np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= n):
        bad = ids[(ids < 0) | (ids >= n)][0]
        raise InvalidNode(f"node id {bad} out of range [0, {n})")
    return ids


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Symmetric weighted adjacency ``A`` in CSR form.

    ``degrees[i]`` is the row sum of ``A``; ``inv_sqrt_degrees`` caches
    ``d_i^{-1/2}`` (set to 0 for isolated nodes, which only exist when the
    caller bypasses validation).
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    inv_sqrt_degrees: np.ndarray
    self_loops: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def normalized_adjacency(self) -> sp.csr_matrix:
        """``S = D^{-1/2} A D^{-1/2}`` with the same sparsity as ``A``."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        vals = self.weights * self.inv_sqrt_degrees[rows] * self.inv_sqrt_degrees[self.indices]
        return sp.csr_matrix((vals, self.indices, self.indptr), shape=(self.n, self.n))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def edges(self):
        """Upper-triangular edge list as ``(i, j, w)`` arrays with ``i < j``."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]


def build_graph(edge_list, n: int | None = None, fallback: bool = False) -> SparseGraph:
    """Build a symmetric CSR graph from ``(i, j[, w])`` records.

    A pair given in both orientations is one undirected edge and the two weights
    must agree; repeated records with the same orientation are summed.  With
    ``fallback=True`` an isolated node receives a unit self-loop instead of
    raising :class:`IsolatedNode`.
    """
    arr = _as_records(edge_list, 3)
    if n is None:
        n = int(arr[:, :2].max()) + 1 if len(arr) else 0
    u = _as_ids(arr[:, 0], n)
    v = _as_ids(arr[:, 1], n)
    w = arr[:, 2]
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise InvalidWeight("edge weights must be finite and > 0")
    if np.any(u == v):
        raise InvalidNode(f"self-loop on node {u[u == v][0]} is not allowed")

    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys, inv = np.unique(lo * n + hi, return_inverse=True)
    forward = u < v
    w_fwd = np.bincount(inv, weights=np.where(forward, w, 0.0), minlength=len(keys))
    w_bwd = np.bincount(inv, weights=np.where(forward, 0.0, w), minlength=len(keys))
    both = (w_fwd > 0) & (w_bwd > 0)
    if np.any(both & ~np.isclose(w_fwd, w_bwd, rtol=1e-12, atol=0.0)):
        k = keys[both & ~np.isclose(w_fwd, w_bwd, rtol=1e-12, atol=0.0)][0]
        raise InvalidWeight(f"edge ({k // n}, {k % n}) given in both orientations with different weights")
    weight = np.where(w_fwd > 0, w_fwd, w_bwd)
    i, j = keys // n, keys % n

    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([weight, weight])

    deg = np.bincount(rows, weights=vals, minlength=n)
    isolated = np.flatnonzero(deg == 0)
    if isolated.size:
        if not fallback:
            raise IsolatedNode(isolated, "degree")
        rows = np.concatenate([rows, isolated])
        cols = np.concatenate([cols, isolated])
        vals = np.concatenate([vals, np.ones(isolated.size)])

    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sort_indices()
    return _graph_from_csr(A, self_loops=isolated if fallback else np.zeros(0, dtype=np.int64))


def _graph_from_csr(A: sp.csr_matrix, self_loops=None) -> SparseGraph:
    A = sp.csr_matrix(A, dtype=np.float64)
    A.sort_indices()
    n = A.shape[0]
    deg = np.asarray(A.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        inv = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    return SparseGraph(
        n=n,
        indptr=A.indptr.astype(np.int64),
        indices=A.indices.astype(np.int64),
        weights=A.data.copy(),
        degrees=deg,
        inv_sqrt_degrees=inv,
        self_loops=np.asarray(self_loops if self_loops is not None else [], dtype=np.int64),
    )


@dataclass(frozen=True, eq=False)
class PairWeightMatrix:
    """``B_ij = sum_k A_kij``: total weight of triangles containing both i and j.

    ``rows/cols/weights`` hold the strictly upper triangle; ``matrix`` is the
    full symmetric CSR matrix with a zero diagonal.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        v = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))


@dataclass(frozen=True, eq=False)
class TriangleTensor:
    """Weighted unordered triples representing the symmetric 3-tensor.

    ``triples`` is an ``(m, 3)`` array with strictly increasing rows, sorted
    lexicographically and unique.  ``node_ptr/node_triples/node_roles`` form a
    CSR incidence index: the triples containing node ``i`` are
    ``node_triples[node_ptr[i]:node_ptr[i+1]]`` and ``node_roles`` gives the
    position (0, 1, 2) of ``i`` inside each of them.
    """

    n: int
    triples: np.ndarray
    tau: np.ndarray
    hyper_degrees: np.ndarray
    inv_sqrt_hyper_degrees: np.ndarray
    node_ptr: np.ndarray
    node_triples: np.ndarray
    node_roles: np.ndarray

    @property
    def num_triples(self) -> int:
        return int(len(self.triples))

    @property
    def dangling(self) -> np.ndarray:
        """Nodes that belong to no triple."""
        return np.flatnonzero(self.hyper_degrees == 0)

    @cached_property
    def scatter(self) -> sp.csr_matrix:
        """``(n, 3m)`` 0/1 matrix summing per-(triple, role) values into nodes.

        Column ``r*m + t`` feeds node ``triples[t, r]``.
        """
        m = self.num_triples
        rows = self.triples.T.ravel()
        cols = np.arange(3 * m)
        return sp.csr_matrix((np.ones(3 * m), (rows, cols)), shape=(self.n, 3 * m))

    @cached_property
    def pairs(self) -> PairWeightMatrix:
        return pair_weights(self)

    def records(self):
        """Rows ``(i, j, k, tau)`` suitable for re-ingestion."""
        return [(int(a), int(b), int(c), float(w)) for (a, b, c), w in zip(self.triples, self.tau)]


def build_triangle_tensor(triples, n: int) -> TriangleTensor:
    """Canonicalize ``(i, j, k[, w])`` records into a :class:`TriangleTensor`.

    Each triple is sorted to ``i < j < k``; duplicates are merged by summing
    their weights.  Zero hyper-degrees are allowed here and are checked by
    :func:`validate_coverage`.
    """
    arr = _as_records(triples, 4)
    ijk = np.column_stack([_as_ids(arr[:, c], n) for c in range(3)]) if len(arr) else np.zeros((0, 3), np.int64)
    w = arr[:, 3]
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise InvalidWeight("triangle weights must be finite and > 0")
    ijk = np.sort(ijk, axis=1)
    if np.any((ijk[:, 0] == ijk[:, 1]) | (ijk[:, 1] == ijk[:, 2])):
        bad = ijk[(ijk[:, 0] == ijk[:, 1]) | (ijk[:, 1] == ijk[:, 2])][0]
        raise DegenerateTriple(f"triple {tuple(int(x) for x in bad)} repeats a node")

    if len(ijk):
        keys = (ijk[:, 0] * n + ijk[:, 1]) * n + ijk[:, 2]
        uniq, inv = np.unique(keys, return_inverse=True)
        tau = np.bincount(inv, weights=w, minlength=len(uniq))
        ijk = np.column_stack([uniq // (n * n), (uniq // n) % n, uniq % n]).astype(np.int64)
    else:
        tau = np.zeros(0)
        ijk = np.zeros((0, 3), dtype=np.int64)
    return _tensor_from_canonical(ijk, tau, n)


def _tensor_from_canonical(ijk: np.ndarray, tau: np.ndarray, n: int) -> TriangleTensor:
    m = len(ijk)
    members = ijk.T.ravel()
    roles = np.repeat(np.arange(3), m)
    tids = np.tile(np.arange(m), 3)
    delta = 2.0 * np.bincount(members, weights=np.tile(tau, 3), minlength=n)
    with np.errstate(divide="ignore"):
        inv = np.where(delta > 0, 1.0 / np.sqrt(delta), 1.0)
    order = np.lexsort((tids, members))
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(np.bincount(members, minlength=n))
    return TriangleTensor(
        n=n,
        triples=ijk,
        tau=np.asarray(tau, dtype=float),
        hyper_degrees=delta,
        inv_sqrt_hyper_degrees=inv,
        node_ptr=ptr,
        node_triples=tids[order],
        node_roles=roles[order],
    )


def pair_weights(T: TriangleTensor) -> PairWeightMatrix:
    """Sum of ``tau`` over the triples containing each node pair."""
    t, w = T.triples, T.tau
    if len(t) == 0:
        z = np.zeros(0, dtype=np.int64)
        return PairWeightMatrix(T.n, z, z, np.zeros(0))
    r = np.concatenate([t[:, 0], t[:, 0], t[:, 1]])
    c = np.concatenate([t[:, 1], t[:, 2], t[:, 2]])
    keys, inv = np.unique(r * T.n + c, return_inverse=True)
    vals = np.bincount(inv, weights=np.tile(w, 3), minlength=len(keys))
    return PairWeightMatrix(T.n, keys // T.n, keys % T.n, vals)


@dataclass(frozen=True)
class CoverageReport:
    zero_degree: list
    zero_hyper_degree: list
    fallback: bool

    @property
    def ok(self) -> bool:
        return not self.zero_degree and not self.zero_hyper_degree


def validate_coverage(G: SparseGraph | None, T: TriangleTensor | None, fallback: bool = False) -> CoverageReport:
    """Report nodes with zero degree or zero hyper-degree.

    Without ``fallback`` any such node raises :class:`IsolatedNode`.  With it,
    the listed hyper-degree-free nodes get a zero tensor contribution and unit
    normalization during spreading.
    """
    if G is not None and T is not None and G.n != T.n:
        raise ShapeError(f"graph has {G.n} nodes but tensor has {T.n}")
    zd = [] if G is None else np.flatnonzero(G.degrees == 0).tolist()
    zh = [] if T is None else np.flatnonzero(T.hyper_degrees == 0).tolist()
    if not fallback:
        if zd:
            raise IsolatedNode(zd, "degree")
        if zh:
            raise IsolatedNode(zh, "hyper-degree")
    return CoverageReport(zero_degree=zd, zero_hyper_degree=zh, fallback=fallback)
