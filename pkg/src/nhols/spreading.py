"""Standard label spreading and nonlinear higher-order label spreading.

Both iterations work column-wise on an ``n x C`` matrix.  Every column carries
its own ``(alpha, beta, gamma)`` and its own stopping test, so a whole
hyper-parameter grid (or all classes of a problem) can be advanced in one
vectorized sweep while producing exactly what per-column runs would produce.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, InvalidLabels, InvalidParam, ShapeError
from .mixing import MixingSpec
from .structures import SparseGraph, TriangleTensor, validate_coverage

__all__ = [
    "SpreadParams",
    "LabelData",
    "SpreadResult",
    "apply_normalized_adjacency",
    "apply_hyper_operator",
    "phi",
    "smooth_labels",
    "nhols_step",
    "nhols_run",
    "nhols_batch",
    "nhols_all_classes",
    "standard_ls_run",
    "standard_ls_batch",
    "predict",
    "label_column_scale",
]


COLUMN_SCALES = ("label-norm", "none")


@dataclass(frozen=True)
class SpreadParams:
    """Mixing weights and stopping rule for NHOLS.

    ``alpha`` weighs the tensor term, ``beta`` the graph term and ``gamma`` the
    label anchor; they are nonnegative and sum to one, with ``gamma > 0``.
    With ``normalize_anchor`` each smoothed label column is rescaled to
    ``phi = 1`` before it enters the iteration.  ``column_scale`` picks the
    prediction rule: ``"label-norm"`` multiplies each converged column by the
    2-norm of its 0/1 label column before the argmax, ``"none"`` is the plain
    argmax.
    """

    alpha: float
    beta: float
    gamma: float
    epsilon: float = 0.01
    tol: float = 1e-5
    max_iters: int = 40
    normalize_anchor: bool = False
    column_scale: str = "label-norm"

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise InvalidParam(f"{name} must be >= 0")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-12:
            raise InvalidParam(f"alpha + beta + gamma must equal 1 (got {self.alpha + self.beta + self.gamma!r})")
        if self.gamma <= 0:
            raise InvalidParam("gamma must be > 0: the label anchor keeps the iteration contractive")
        if not 0 < self.epsilon < 1:
            raise InvalidParam("epsilon must lie in (0, 1)")
        if self.tol < 0 or self.max_iters < 1:
            raise InvalidParam("tol must be >= 0 and max_iters >= 1")
        if self.column_scale not in COLUMN_SCALES:
            raise InvalidParam(f"column_scale must be one of {COLUMN_SCALES}")

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float, **kw) -> "SpreadParams":
        return cls(alpha=alpha, beta=beta, gamma=1.0 - alpha - beta, **kw)

    @property
    def lam(self) -> float:
        return self.beta / self.gamma

    @property
    def mu(self) -> float:
        return self.alpha / self.gamma


@dataclass(frozen=True, eq=False)
class LabelData:
    """One-hot memberships ``Y`` (``n x c``) of the known nodes."""

    c: int
    Y: np.ndarray
    known_mask: np.ndarray

    def __post_init__(self):
        Y = self.Y
        if Y.ndim != 2 or Y.shape[1] != self.c or len(self.known_mask) != Y.shape[0]:
            raise ShapeError("Y must be n x c and known_mask length n")
        rows = Y.sum(axis=1)
        if np.any(rows[self.known_mask] != 1) or np.any(rows[~self.known_mask] != 0):
            raise InvalidLabels("known rows need exactly one 1, unknown rows must be zero")

    @classmethod
    def from_labels(cls, labels, known_mask, c: int | None = None) -> "LabelData":
        labels = np.asarray(labels)
        known_mask = np.asarray(known_mask, dtype=bool)
        if c is None:
            c = int(labels[known_mask].max()) + 1 if known_mask.any() else 1
        if known_mask.any() and (labels[known_mask].min() < 0 or labels[known_mask].max() >= c):
            raise InvalidLabels(f"known labels must lie in [0, {c})")
        Y = np.zeros((len(labels), c))
        idx = np.flatnonzero(known_mask)
        Y[idx, labels[idx].astype(np.int64)] = 1.0
        return cls(c=c, Y=Y, known_mask=known_mask)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def smoothed(self, epsilon: float) -> np.ndarray:
        return smooth_labels(self.Y, epsilon)


@dataclass(eq=False)
class SpreadResult:
    """Approximate solutions for a batch of columns plus per-column diagnostics.

    ``history`` holds one ``(column, iteration, rel_change, phi_g)`` row per
    iteration and column (``phi_g`` is NaN for standard LS).
    """

    F: np.ndarray
    iterations: np.ndarray
    rel_change: np.ndarray
    converged: np.ndarray
    history: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    predictions: np.ndarray | None = None

    def column_history(self, col: int) -> np.ndarray:
        h = self.history[self.history[:, 0] == col]
        return h[:, 1:]


def _check_len(n, f):
    f = np.asarray(f, dtype=float)
    if f.shape[0] != n:
        raise ShapeError(f"vector of length {f.shape[0]} does not match {n} nodes")
    return f


def apply_normalized_adjacency(G: SparseGraph, f) -> np.ndarray:
    """``S f`` with ``S = D^{-1/2} A D^{-1/2}``; ``f`` may be a vector or an ``n x C`` block."""
    f = _check_len(G.n, f)
    return G.normalized_adjacency @ f


def _contract(T: TriangleTensor, spec: MixingSpec, f: np.ndarray) -> np.ndarray:
    squeeze = f.ndim == 1
    F = f[:, None] if squeeze else f
    code = kernels.kind_code(spec) if kernels.ENABLED else None
    if code is not None and T.num_triples:
        out = kernels.contract(T.triples, T.tau, T.inv_sqrt_hyper_degrees, np.ascontiguousarray(F, dtype=float), *code)
        return out[:, 0] if squeeze else out
    return _contract_numpy(T, spec, F, squeeze)


def _contract_numpy(T, spec, F, squeeze=False):
    x = F * T.inv_sqrt_hyper_degrees[:, None]
    t = T.triples
    x0, x1, x2 = x[t[:, 0]], x[t[:, 1]], x[t[:, 2]]
    w = 2.0 * T.tau[:, None]
    vals = np.concatenate([w * spec(x1, x2), w * spec(x0, x2), w * spec(x0, x1)])
    out = (T.scatter @ vals) * T.inv_sqrt_hyper_degrees[:, None]
    return out[:, 0] if squeeze else out


def _check_domain(spec: MixingSpec, f: np.ndarray):
    if np.any(np.isnan(f)) or np.any(f < 0):
        raise DomainError("spreading vectors must be nonnegative")
    if spec.needs_positive and np.any(f == 0):
        raise DomainError(f"mixing {spec.label} needs strictly positive vectors")


def apply_hyper_operator(T: TriangleTensor, spec: MixingSpec, f) -> np.ndarray:
    """Normalized tensor map ``D_H^{-1/2} A sigma(D_H^{-1/2} f)``.

    Each triple is visited once; node ``i`` of triple ``{i, j, k}`` receives
    ``2 tau sigma(x_j, x_k)``, which accounts for both ``A_ijk`` and ``A_ikj``.
    Nodes outside every triple get 0.
    """
    f = _check_len(T.n, f)
    _check_domain(spec, f)
    return _contract(T, spec, f)


def _phi(T: TriangleTensor, spec: MixingSpec, f: np.ndarray) -> np.ndarray:
    P = T.pairs
    if P.weights.size == 0:
        raise DomainError("phi is undefined for a tensor without triples")
    squeeze = f.ndim == 1
    F = f[:, None] if squeeze else f
    code = kernels.kind_code(spec) if kernels.ENABLED else None
    if code is not None:
        total = kernels.pair_sum(P.rows, P.cols, P.weights, T.inv_sqrt_hyper_degrees,
                                 np.ascontiguousarray(F, dtype=float), *code)
    else:
        x = F * T.inv_sqrt_hyper_degrees[:, None]
        s = spec(x[P.rows], x[P.cols])
        total = (P.weights[:, None] * s * s).sum(axis=0)
    # B is symmetric with zero diagonal: the full sum is twice the upper part
    val = 0.5 * np.sqrt(2.0 * total)
    return val[0] if squeeze else val


def phi(T: TriangleTensor, spec: MixingSpec, f):
    """Normalizing functional ``1/2 sqrt(sum_ij B_ij sigma(x_i, x_j)^2)``, ``x = D_H^{-1/2} f``.

    Column-wise for an ``n x C`` block.
    """
    f = _check_len(T.n, f)
    _check_domain(spec, f)
    out = _phi(T, spec, f)
    return float(out) if np.ndim(out) == 0 else out


def smooth_labels(Y_col, epsilon: float) -> np.ndarray:
    if not 0 < epsilon < 1:
        raise InvalidParam("epsilon must lie in (0, 1)")
    return (1.0 - epsilon) * np.asarray(Y_col, dtype=float) + epsilon


def nhols_step(G: SparseGraph | None, T: TriangleTensor, spec: MixingSpec, params: SpreadParams, y_eps, f):
    """One normalized update ``g = alpha S_H(f) + beta S f + gamma y``; returns ``(g / phi(g), phi(g))``.

    ``y_eps`` is used as given: pass the normalized anchor to reproduce a step
    of :func:`nhols_batch` with ``normalize_anchor=True``.
    """
    f = _check_len(T.n, f)
    if np.any(f <= 0):
        raise DomainError("NHOLS iterates must be strictly positive")
    g = params.alpha * _contract(T, spec, f) + params.gamma * np.asarray(y_eps, dtype=float)
    if params.beta:
        g = g + params.beta * apply_normalized_adjacency(G, f)
    ph = _phi(T, spec, g)
    return g / ph, ph


def _as_cols(x, C):
    x = np.asarray(x, dtype=float)
    return np.full(C, float(x)) if x.ndim == 0 else x


def nhols_batch(
    G: SparseGraph | None,
    T: TriangleTensor,
    spec: MixingSpec,
    alpha,
    beta,
    Y_eps: np.ndarray,
    tol: float = 1e-5,
    max_iters: int = 40,
    F0: np.ndarray | None = None,
    record: bool = True,
    normalize_anchor: bool = False,
) -> SpreadResult:
    """Run NHOLS on every column of ``Y_eps`` (already smoothed, ``n x C``).

    ``alpha`` and ``beta`` are scalars or per-column arrays; ``gamma`` is
    ``1 - alpha - beta``.  The anchor of each column is ``Y_eps`` (divided by
    its ``phi`` with ``normalize_anchor=True``), and iterates start from the
    anchor unless ``F0`` is given.  A column stops once its
    relative 2-norm change drops below ``tol``; the others keep iterating up to
    ``max_iters``.
    """
    Y_eps = np.asarray(Y_eps, dtype=float)
    if Y_eps.ndim == 1:
        Y_eps = Y_eps[:, None]
    n, C = Y_eps.shape
    if n != T.n or (G is not None and G.n != n):
        raise ShapeError("label block, graph and tensor disagree on n")
    alpha = _as_cols(alpha, C)
    beta = _as_cols(beta, C)
    gamma = 1.0 - alpha - beta
    if np.any(alpha < 0) or np.any(beta < 0) or np.any(gamma <= 0):
        raise InvalidParam("need alpha, beta >= 0 and alpha + beta < 1")
    if G is None and np.any(beta > 0):
        raise InvalidParam("beta > 0 requires a graph")
    if np.any(Y_eps <= 0):
        raise DomainError("the smoothed label block must be strictly positive")

    if normalize_anchor:
        Y_eps = Y_eps / _phi(T, spec, Y_eps)
    F = Y_eps.copy() if F0 is None else np.array(F0, dtype=float, copy=True).reshape(n, C)
    if np.any(F <= 0):
        raise DomainError("initial vectors must be strictly positive")
    iters = np.zeros(C, dtype=np.int64)
    rel = np.full(C, np.inf)
    active = np.arange(C)
    hist = []
    for r in range(max_iters):
        Fa = F[:, active]
        g = alpha[active] * _contract(T, spec, Fa) + gamma[active] * Y_eps[:, active]
        if G is not None and np.any(beta[active]):
            g += beta[active] * (G.normalized_adjacency @ Fa)
        ph = _phi(T, spec, g)
        Fn = g / ph
        rc = np.linalg.norm(Fn - Fa, axis=0) / np.linalg.norm(Fn, axis=0)
        F[:, active] = Fn
        iters[active] += 1
        rel[active] = rc
        if record:
            hist.append(np.column_stack([active, np.full(active.size, r + 1), rc, ph]))
        active = active[rc >= tol]
        if active.size == 0:
            break
    return SpreadResult(
        F=F,
        iterations=iters,
        rel_change=rel,
        converged=rel < tol,
        history=np.concatenate(hist) if hist else np.zeros((0, 4)),
    )


def nhols_run(G, T, spec, params: SpreadParams, Y, class_index: int, F0=None) -> SpreadResult:
    """Full iteration for one class: smooth ``Y[:, class_index]`` and iterate from it."""
    Y = np.asarray(Y, dtype=float)
    col = Y[:, class_index] if Y.ndim == 2 else Y
    y_eps = smooth_labels(col, params.epsilon)
    return nhols_batch(G, T, spec, params.alpha, params.beta, y_eps[:, None],
                       tol=params.tol, max_iters=params.max_iters, F0=F0,
                       normalize_anchor=params.normalize_anchor)


def label_column_scale(Y) -> np.ndarray:
    """2-norm of each 0/1 label column, i.e. the square root of its known count.

    Every NHOLS column ends on the slice ``phi = 1``, which behaves like a unit
    2-norm: a class spread over ``s`` nodes gets entries of order ``1/sqrt(s)``.
    Multiplying by this scale puts classes of different sizes on equal footing
    (the known counts are proportional to class sizes under per-class sampling).
    """
    Y = np.asarray(Y, dtype=float)
    return np.linalg.norm(Y.reshape(Y.shape[0], -1), axis=0)


def predict(F, scale=None) -> np.ndarray:
    """Row-wise argmax of ``F * scale``; ties go to the lowest class index."""
    F = np.asarray(F, dtype=float)
    if scale is not None:
        F = F * np.asarray(scale, dtype=float)
    return np.argmax(F, axis=1)


def nhols_all_classes(G, T, spec, params: SpreadParams, labels: LabelData, fallback: bool = False) -> SpreadResult:
    """Spread every class with NHOLS and attach argmax predictions."""
    validate_coverage(G, T, fallback=fallback)
    res = nhols_batch(G, T, spec, params.alpha, params.beta, labels.smoothed(params.epsilon),
                      tol=params.tol, max_iters=params.max_iters,
                      normalize_anchor=params.normalize_anchor)
    scale = label_column_scale(labels.Y) if params.column_scale == "label-norm" else None
    res.predictions = predict(res.F, scale)
    return res


def standard_ls_batch(G: SparseGraph, beta, Y, tol: float = 1e-5, max_iters: int = 40, record: bool = True) -> SpreadResult:
    """Unnormalized ``F <- beta S F + (1 - beta) Y`` started at ``F = Y``, per column."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, C = Y.shape
    if n != G.n:
        raise ShapeError("label block and graph disagree on n")
    beta = _as_cols(beta, C)
    gamma = 1.0 - beta
    if np.any(beta < 0) or np.any(gamma < 0):
        raise InvalidParam("need 0 <= beta <= 1")
    F = Y.copy()
    iters = np.zeros(C, dtype=np.int64)
    rel = np.full(C, np.inf)
    active = np.arange(C)
    hist = []
    for r in range(max_iters):
        Fa = F[:, active]
        Fn = beta[active] * (G.normalized_adjacency @ Fa) + gamma[active] * Y[:, active]
        num = np.linalg.norm(Fn - Fa, axis=0)
        den = np.linalg.norm(Fn, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            rc = np.where(den > 0, num / den, 0.0)
        F[:, active] = Fn
        iters[active] += 1
        rel[active] = rc
        if record:
            hist.append(np.column_stack([active, np.full(active.size, r + 1), rc, np.full(active.size, np.nan)]))
        active = active[rc >= tol]
        if active.size == 0:
            break
    return SpreadResult(F=F, iterations=iters, rel_change=rel, converged=rel < tol,
                        history=np.concatenate(hist) if hist else np.zeros((0, 4)))


def standard_ls_run(G: SparseGraph, beta: float, gamma: float, Y, tol: float = 1e-5, max_iters: int = 40) -> SpreadResult:
    """Label spreading ``F <- beta S F + gamma Y`` without normalization."""
    if beta < 0 or gamma < 0 or abs(beta + gamma - 1.0) > 1e-12:
        raise InvalidParam("need beta, gamma >= 0 with beta + gamma = 1")
    if gamma == 0:
        warnings.warn("gamma = 0 turns label spreading into pure diffusion", RuntimeWarning, stacklevel=2)
    res = standard_ls_batch(G, beta, Y, tol=tol, max_iters=max_iters)
    res.predictions = predict(res.F)
    return res
