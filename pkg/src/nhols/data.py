"""Synthetic and point-cloud datasets: SBM graphs, kNN graphs, triangles, label samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidLabels, InvalidParam, IsolatedNode, ShapeError
from .structures import SparseGraph, TriangleTensor, build_graph, build_triangle_tensor

__all__ = [
    "PointCloud",
    "SbmSpec",
    "LabelSample",
    "generate_sbm",
    "build_knn_graph",
    "enumerate_triangles",
    "sample_labeled_set",
]


@dataclass(frozen=True, eq=False)
class PointCloud:
    X: np.ndarray
    labels: np.ndarray | None = None
    ids: list | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        object.__setattr__(self, "X", X)
        if X.ndim != 2:
            raise ShapeError("points must be an n x d array")
        if not np.all(np.isfinite(X)):
            raise InvalidParam("point coordinates must be finite")
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (X.shape[0],):
                raise ShapeError("one label per point")
            if lab.size and lab.min() < 0:
                raise InvalidLabels("labels must be >= 0")
            object.__setattr__(self, "labels", lab)
        if self.ids is not None and len(self.ids) != X.shape[0]:
            raise ShapeError("one id per point")

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class SbmSpec:
    sizes: tuple
    p_in: float
    p_out: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes or min(self.sizes) < 1:
            raise InvalidParam("class sizes must be positive")
        if not (0 <= self.p_out <= self.p_in <= 1):
            raise InvalidParam("need 0 <= p_out <= p_in <= 1")

    @property
    def rho(self) -> float:
        return self.p_in / self.p_out if self.p_out > 0 else np.inf


def _unrank_upper(idx, s):
    """Map linear indices of the strict upper triangle of an ``s x s`` matrix to ``(i, j)``."""
    idx = np.asarray(idx, dtype=np.int64)
    total = s * (s - 1) // 2
    # count pairs from the end: idx -> position in reversed order
    rev = total - 1 - idx
    r = ((np.sqrt(8.0 * rev + 1.0) - 1.0) / 2.0).astype(np.int64)
    # fix float rounding at boundaries
    r += ((r + 1) * (r + 2) // 2 <= rev).astype(np.int64)
    r -= (r * (r + 1) // 2 > rev).astype(np.int64)
    i = s - 2 - r
    j = s - 1 - (rev - r * (r + 1) // 2)
    return i, j


def _sample_block(rng, count, p):
    if p <= 0 or count == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(count, dtype=np.int64)
    k = rng.binomial(count, p)
    return np.sort(rng.choice(count, size=k, replace=False))


def _sbm_edges(spec: SbmSpec, rng):
    offs = np.concatenate([[0], np.cumsum(spec.sizes)])
    us, vs = [], []
    for a, sa in enumerate(spec.sizes):
        sel = _sample_block(rng, sa * (sa - 1) // 2, spec.p_in)
        i, j = _unrank_upper(sel, sa)
        us.append(i + offs[a])
        vs.append(j + offs[a])
        for b in range(a + 1, len(spec.sizes)):
            sb = spec.sizes[b]
            sel = _sample_block(rng, sa * sb, spec.p_out)
            us.append(sel // sb + offs[a])
            vs.append(sel % sb + offs[b])
    return np.concatenate(us), np.concatenate(vs)


def generate_sbm(spec: SbmSpec) -> tuple[SparseGraph, np.ndarray]:
    """Sample an undirected SBM graph with unit weights.

    Nodes are numbered class by class.  If the sample has an isolated node it is
    redrawn once from the same generator stream; a second failure raises
    :class:`IsolatedNode`.
    """
    n = sum(spec.sizes)
    labels = np.repeat(np.arange(len(spec.sizes)), spec.sizes)
    rng = np.random.default_rng(spec.seed)
    for attempt in range(2):
        u, v = _sbm_edges(spec, rng)
        deg = np.bincount(np.concatenate([u, v]), minlength=n)
        if np.all(deg > 0):
            break
        if attempt:
            raise IsolatedNode(np.flatnonzero(deg == 0), "degree")
    G = build_graph(np.column_stack([u, v, np.ones(len(u))]), n=n)
    return G, labels


def _knn_lists(X: np.ndarray, k: int, chunk: int | None = None) -> np.ndarray:
    n, d = X.shape
    if chunk is None:
        chunk = max(1, min(n, 4_000_000 // max(n, 1)))
    out = np.empty((n, k), dtype=np.int64)
    for s in range(0, n, chunk):
        rows = np.arange(s, min(n, s + chunk))
        D = cdist(X[rows], X, "sqeuclidean")
        D[np.arange(len(rows)), rows] = np.inf
        kth = np.partition(D, k - 1, axis=1)[:, k - 1]
        for r in range(len(rows)):
            less = np.flatnonzero(D[r] < kth[r])
            ties = np.flatnonzero(D[r] == kth[r])[: k - less.size]
            cand = np.concatenate([less, ties])
            # distance first, index second
            order = np.lexsort((cand, D[r, cand]))
            out[rows[r]] = cand[order]
    return out


def build_knn_graph(P: PointCloud | np.ndarray, k: int = 7, mutual: bool = False) -> SparseGraph:
    """Unit-weight kNN graph under Euclidean distance.

    Each point links to its ``k`` nearest other points (ties broken by lower
    index).  The union of these directed links is symmetrized; with ``mutual``
    only reciprocal links are kept (which may leave isolated nodes and then
    raises).
    """
    X = P.X if isinstance(P, PointCloud) else np.asarray(P, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise InvalidParam(f"need 1 <= k < n (k={k}, n={n})")
    nbrs = _knn_lists(X, k)
    src = np.repeat(np.arange(n), k)
    dst = nbrs.ravel()
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    keys, counts = np.unique(lo * n + hi, return_counts=True)
    if mutual:
        keys = keys[counts == 2]
    return build_graph(np.column_stack([keys // n, keys % n, np.ones(len(keys))]), n=n)


def enumerate_triangles(G: SparseGraph, weighting: str = "unit", max_paths: int = 4_000_000) -> TriangleTensor:
    """List every 3-clique once.

    Edges are oriented from lower to higher (degree, id) rank; each triangle
    ``x < y < z`` in rank order is found once as the 2-path ``x -> y -> z`` closed
    by the edge ``x -> z``.  The 2-paths are expanded in chunks of at most
    ``max_paths``.

    ``weighting`` sets tau: ``unit`` (1), ``product``, ``min`` or ``mean`` of the
    three edge weights.
    """
    if weighting not in ("unit", "product", "min", "mean"):
        raise InvalidParam(f"unknown triangle weighting {weighting!r}")
    n = G.n
    i, j, w = G.edges()
    order = np.lexsort((np.arange(n), G.degrees))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    a = np.where(rank[i] < rank[j], i, j)
    b = np.where(rank[i] < rank[j], j, i)

    # oriented CSR: out-neighbours of each node
    srt = np.lexsort((b, a))
    a, b, w = a[srt], b[srt], w[srt]
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(np.bincount(a, minlength=n))
    keys = a * n + b  # sorted because of the lexsort

    outdeg = np.diff(ptr)
    per_edge = outdeg[b]
    found = []
    start = 0
    m = len(a)
    while start < m:
        csum = np.cumsum(per_edge[start:])
        stop = start + max(1, int(np.searchsorted(csum, max_paths, side="right")))
        ea, eb = a[start:stop], b[start:stop]
        cnt = per_edge[start:stop]
        total = int(cnt.sum())
        if total:
            x = np.repeat(ea, cnt)
            y = np.repeat(eb, cnt)
            offs = np.repeat(ptr[eb] - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
            z = b[np.arange(total) + offs]
            q = x * n + z
            pos = np.searchsorted(keys, q)
            pos[pos == m] = 0
            hit = keys[pos] == q
            found.append(np.column_stack([x[hit], y[hit], z[hit]]))
        start = stop
    tri = np.concatenate(found) if found else np.zeros((0, 3), dtype=np.int64)
    tri = np.sort(tri, axis=1)
    tri = tri[np.lexsort((tri[:, 2], tri[:, 1], tri[:, 0]))]

    if weighting == "unit" or len(tri) == 0:
        tau = np.ones(len(tri))
    else:
        A = G.adjacency
        w01 = np.asarray(A[tri[:, 0], tri[:, 1]]).ravel()
        w02 = np.asarray(A[tri[:, 0], tri[:, 2]]).ravel()
        w12 = np.asarray(A[tri[:, 1], tri[:, 2]]).ravel()
        W = np.column_stack([w01, w02, w12])
        tau = {"product": W.prod(axis=1), "min": W.min(axis=1), "mean": W.mean(axis=1)}[weighting]
    return build_triangle_tensor(np.column_stack([tri, tau]), n)


@dataclass(frozen=True, eq=False)
class LabelSample:
    fraction: float
    seed: int
    known_mask: np.ndarray
    counts: tuple

    @property
    def known(self) -> np.ndarray:
        return np.flatnonzero(self.known_mask)


def _per_class_count(fraction, size, rounding):
    x = fraction * size
    if rounding == "ceil":
        # tolerate float noise such as 0.06 * 100 = 6.000000000000001
        cnt = int(np.ceil(x - 1e-9))
    else:
        cnt = int(np.floor(x + 0.5))
    return min(max(1, cnt), size)


def sample_labeled_set(labels, fraction: float, seed: int = 0, rounding: str = "round") -> LabelSample:
    """Draw ``fraction * size`` (at least one) known nodes per class.

    ``rounding`` turns the product into a count: ``round`` (half up) or
    ``ceil``.  Classes are ``0 .. max(labels)``; each must be nonempty.
    Sampling is uniform without replacement and reproducible for a given seed.
    """
    if rounding not in ("round", "ceil"):
        raise InvalidParam(f"rounding must be 'round' or 'ceil', got {rounding!r}")
    labels = np.asarray(labels, dtype=np.int64)
    if not 0 < fraction <= 1:
        raise InvalidParam("fraction must lie in (0, 1]")
    if labels.size == 0 or labels.min() < 0:
        raise InvalidLabels("labels must be a nonempty array of nonnegative ints")
    c = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=c)
    if np.any(sizes == 0):
        raise InvalidLabels(f"class {int(np.flatnonzero(sizes == 0)[0])} is empty")
    rng = np.random.default_rng(seed)
    mask = np.zeros(labels.size, dtype=bool)
    counts = []
    for cls in range(c):
        members = np.flatnonzero(labels == cls)
        cnt = _per_class_count(fraction, members.size, rounding)
        mask[rng.choice(members, size=cnt, replace=False)] = True
        counts.append(cnt)
    return LabelSample(fraction=fraction, seed=seed, known_mask=mask, counts=tuple(counts))
