"""Energies, losses and numerical oracles for checking the spreading theory.

Everything here is evaluation-only: nothing in :mod:`nhols.spreading` depends
on it, so these functions can serve as independent checks of the iterations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InvalidParam, ShapeError
from .mixing import MixingSpec
from .spreading import (
    SpreadParams,
    _contract,
    _phi,
    apply_normalized_adjacency,
    nhols_step,
    phi,
    smooth_labels,
)
from .structures import SparseGraph, TriangleTensor

__all__ = [
    "LossParams",
    "energy_E1",
    "energy_E2",
    "loss_theta",
    "loss_theta_tilde",
    "theta_tilde_gradient_closed_form",
    "hyper_energy",
    "hyper_energy_gradient",
    "finite_diff_gradient",
    "hilbert_distance",
    "AuditResult",
    "contraction_audit",
    "random_slice_points",
    "clique_expansion_matrix",
    "standard_ls_loss",
    "standard_ls_gradient",
    "log_ratio_bound",
    "anchor_bound_constant",
]


@dataclass(frozen=True, eq=False)
class LossParams:
    """Weights of the regularized loss and its normalized anchor ``y_tilde``.

    ``lam = beta/gamma`` weighs the graph energy, ``mu = alpha/gamma`` the
    tensor energy.  ``step`` is the gradient step ``h`` with
    ``(1 - h)/h = lam + mu``.
    """

    lam: float
    mu: float
    y_tilde: np.ndarray

    @classmethod
    def from_params(cls, T: TriangleTensor, spec: MixingSpec, params: SpreadParams, y_eps) -> "LossParams":
        y_eps = np.asarray(y_eps, dtype=float)
        return cls(lam=params.lam, mu=params.mu, y_tilde=y_eps / phi(T, spec, y_eps))

    @property
    def step(self) -> float:
        return 1.0 / (1.0 + self.lam + self.mu)


def energy_E1(G: SparseGraph, f) -> float:
    """``sum_ij A_ij (f_i/sqrt(d_i) - f_j/sqrt(d_j))^2`` over ordered pairs."""
    f = np.asarray(f, dtype=float)
    if f.shape != (G.n,):
        raise ShapeError("f must be a length-n vector")
    x = f * G.inv_sqrt_degrees
    rows = np.repeat(np.arange(G.n), np.diff(G.indptr))
    diff = x[rows] - x[G.indices]
    return float(np.sum(G.weights * diff * diff))


def energy_E2(T: TriangleTensor, spec: MixingSpec, f) -> float:
    """``sum_ijk A_ijk (x_i - sigma(x_j, x_k)/2)^2`` with ``x = D_H^{-1/2} f``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (T.n,):
        raise ShapeError("f must be a length-n vector")
    if np.any(f < 0) or (spec.needs_positive and np.any(f == 0)):
        raise DomainError("f outside the mixing-function domain")
    x = f * T.inv_sqrt_hyper_degrees
    t = T.triples
    x0, x1, x2 = x[t[:, 0]], x[t[:, 1]], x[t[:, 2]]
    r = (x0 - 0.5 * spec(x1, x2)) ** 2 + (x1 - 0.5 * spec(x0, x2)) ** 2 + (x2 - 0.5 * spec(x0, x1)) ** 2
    # (i,j,k) and (i,k,j) give the same term
    return float(np.sum(2.0 * T.tau * r))


def loss_theta(G, T, spec, lp: LossParams, f) -> float:
    f = np.asarray(f, dtype=float)
    val = np.sum((f - lp.y_tilde) ** 2)
    if lp.lam:
        val += lp.lam * energy_E1(G, f)
    if lp.mu:
        val += lp.mu * energy_E2(T, spec, f)
    return float(0.5 * val)


def loss_theta_tilde(G, T, spec, lp: LossParams, f) -> float:
    """``theta(f) - (mu/2) phi(f)^2``; equals ``theta - mu/2`` on the slice ``phi = 1``."""
    out = loss_theta(G, T, spec, lp, f)
    if lp.mu:
        out -= 0.5 * lp.mu * phi(T, spec, f) ** 2
    return out


def theta_tilde_gradient_closed_form(G, T, spec, lp: LossParams, f) -> np.ndarray:
    """``(1 + lam + mu) f - lam S f - mu S_H(f) - y_tilde``.

    This is the closed form obtained by assuming the tensor energy has gradient
    ``D_H f - A sigma(f)``; it is exact for the arithmetic mixing only (see
    :func:`hyper_energy_gradient`).  It also counts the graph term once per
    edge, while ``E1`` sums ordered pairs, so the true gradient of
    :func:`loss_theta_tilde` carries an extra ``lam (f - S f)``.
    """
    f = np.asarray(f, dtype=float)
    out = (1.0 + lp.lam + lp.mu) * f - lp.y_tilde
    if lp.lam:
        out -= lp.lam * apply_normalized_adjacency(G, f)
    if lp.mu:
        out -= lp.mu * _contract(T, spec, f)
    return out


def _raw_contract(T: TriangleTensor, spec: MixingSpec, f: np.ndarray) -> np.ndarray:
    """Unnormalized ``A sigma(f)``."""
    t = T.triples
    f0, f1, f2 = f[t[:, 0]], f[t[:, 1]], f[t[:, 2]]
    w = 2.0 * T.tau
    vals = np.concatenate([w * spec(f1, f2), w * spec(f0, f2), w * spec(f0, f1)])
    return T.scatter @ vals


def hyper_energy(T: TriangleTensor, spec: MixingSpec, f) -> float:
    """``f^T (D_H f - A sigma(f)) / 2``."""
    f = np.asarray(f, dtype=float)
    return float(f @ (T.hyper_degrees * f - _raw_contract(T, spec, f)) / 2.0)


def hyper_energy_gradient(T: TriangleTensor, spec: MixingSpec, f, exact: bool = False) -> np.ndarray:
    """Gradient of :func:`hyper_energy`.

    With ``exact=False`` returns ``D_H f - A sigma(f)``, the form given by Euler's identity for homogeneous maps.
    With ``exact=True`` returns ``D_H f - (A sigma(f) + J^T f) / 2`` where ``J``
    is the Jacobian of ``A sigma``; the two agree iff ``J^T f = J f``, which holds
    for the arithmetic mixing but not for the nonlinear ones.  Partial
    derivatives of ``sigma`` are taken by central differences in each argument.
    """
    f = np.asarray(f, dtype=float)
    Af = _raw_contract(T, spec, f)
    if not exact:
        return T.hyper_degrees * f - Af
    t = T.triples
    w = 2.0 * T.tau
    f0, f1, f2 = f[t[:, 0]], f[t[:, 1]], f[t[:, 2]]

    def d1(a, b):
        h = 1e-6 * np.maximum(a, 1e-300)
        return (spec(a + h, b) - spec(a - h, b)) / (2 * h)

    # (J^T f)_m = sum_i f_i dF_i/df_m.  Node m sits in triple {m, u, v}; the rows
    # u and v each depend on f_m through one sigma argument.
    jt = np.zeros(T.n)
    for m_col, u_col, v_col in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
        fm = (f0, f1, f2)[m_col]
        fu = (f0, f1, f2)[u_col]
        fv = (f0, f1, f2)[v_col]
        contrib = w * (fu * d1(fm, fv) + fv * d1(fm, fu))
        jt += np.bincount(t[:, m_col], weights=contrib, minlength=T.n)
    return T.hyper_degrees * f - 0.5 * (Af + jt)


def finite_diff_gradient(func, f, step: float | None = None) -> np.ndarray:
    """Central-difference gradient with ``h = 1e-6 * max(1, ||f||_inf)`` by default.

    If a probe leaves ``func``'s domain (it raises :class:`DomainError`) the step
    is shrunk tenfold once for that coordinate; a second failure propagates.
    """
    f = np.asarray(f, dtype=float)
    h0 = 1e-6 * max(1.0, float(np.max(np.abs(f)))) if step is None else float(step)
    if h0 <= 0:
        raise InvalidParam("step must be > 0")
    g = np.empty_like(f)
    for i in range(f.size):
        h = h0
        for attempt in range(2):
            e = np.zeros_like(f)
            e[i] = h
            try:
                g[i] = (func(f + e) - func(f - e)) / (2.0 * h)
                break
            except DomainError:
                if attempt:
                    raise
                h /= 10.0
    return g


def hilbert_distance(u, v) -> float:
    """``log(max_i u_i/v_i) - log(min_i u_i/v_i)`` for positive ``u, v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ShapeError("u and v must have the same shape")
    if np.any(~(u > 0)) or np.any(~(v > 0)):
        raise DomainError("Hilbert distance needs strictly positive vectors")
    r = np.log(u) - np.log(v)
    return float(r.max() - r.min())


def random_slice_points(T, spec, count: int, rng, spread: float = 1.0, center=None) -> np.ndarray:
    """``count`` positive vectors with ``phi = 1`` (as columns).

    Entries are log-normal around ``center`` (ones by default) with log-scale
    ``spread``.
    """
    base = np.ones(T.n) if center is None else np.asarray(center, dtype=float)
    X = base[:, None] * np.exp(rng.normal(0.0, spread, (T.n, count)))
    return X / _phi(T, spec, X)


@dataclass(frozen=True)
class AuditResult:
    max_ratio: float
    mean_ratio: float
    trials: int
    ratios: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(self.max_ratio < 1.0)


def contraction_audit(G, T, spec, params: SpreadParams, trials: int = 1000, seed: int = 0, y_eps=None) -> AuditResult:
    """Largest observed ``d(step(u), step(v)) / d(u, v)`` over random slice pairs.

    ``y_eps`` defaults to a smoothed random one-hot column.  Pairs are drawn
    with a range of log-scale spreads so that both near and far pairs occur.
    """
    rng = np.random.default_rng(seed)
    if y_eps is None:
        col = np.zeros(T.n)
        col[rng.choice(T.n, size=max(1, T.n // 10), replace=False)] = 1.0
        y_eps = smooth_labels(col, params.epsilon)
    spreads = np.exp(rng.uniform(np.log(1e-3), np.log(2.0), trials))
    ratios = np.empty(trials)
    for k in range(trials):
        u = random_slice_points(T, spec, 1, rng, spreads[k])[:, 0]
        v = random_slice_points(T, spec, 1, rng, spreads[k])[:, 0]
        du = hilbert_distance(u, v)
        su, _ = nhols_step(G, T, spec, params, y_eps, u)
        sv, _ = nhols_step(G, T, spec, params, y_eps, v)
        ratios[k] = hilbert_distance(su, sv) / du if du > 0 else 0.0
    return AuditResult(float(ratios.max()), float(ratios.mean()), trials, ratios)


def clique_expansion_matrix(T: TriangleTensor) -> sp.csr_matrix:
    """``2 D_H^{-1/2} K W K^T D_H^{-1/2}`` with the diagonal removed.

    ``K`` is the node-by-hyperedge incidence matrix and ``W`` the diagonal of
    hyperedge weights.  Off the diagonal, ``2 (K W K^T)_ij = sum_k A_ijk + A_ikj``;
    the diagonal has no tensor counterpart and is dropped.
    """
    m = T.num_triples
    K = sp.csr_matrix((np.ones(3 * m), (T.triples.ravel(), np.repeat(np.arange(m), 3))), shape=(T.n, m))
    W = sp.diags(T.tau)
    M = (K @ W @ K.T).tocsr()
    M.setdiag(0.0)
    M.eliminate_zeros()
    Dm = sp.diags(T.inv_sqrt_hyper_degrees)
    return (2.0 * Dm @ M @ Dm).tocsr()


def standard_ls_loss(G: SparseGraph, f, y, lam: float) -> float:
    """``1/2 (||f - y||^2 + lam f^T (I - S) f)``."""
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(0.5 * (np.sum((f - y) ** 2) + lam * (f @ f - f @ apply_normalized_adjacency(G, f))))


def standard_ls_gradient(G: SparseGraph, f, y, lam: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return (1.0 + lam) * f - lam * apply_normalized_adjacency(G, f) - np.asarray(y, dtype=float)


def log_ratio_bound(a, b, c):
    """Both sides of ``log((a+c)/(b+c)) <= a/(a+c) * log(a/b)`` (``a >= b > 0``, ``c > 0``)."""
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    return np.log((a + c) / (b + c)), a / (a + c) * np.log(a / b)


def anchor_bound_constant(G, T, spec, params: SpreadParams, y_eps, samples: int = 1000, seed: int = 0) -> float:
    """Empirical ``max_i F(f)_i / y_i`` over random slice points.

    ``F(f) = alpha S_H(f) + beta S f`` and ``y = gamma y_eps``.  This is a lower
    estimate of the constant ``C`` with ``F(f) <= C y`` on the slice.
    """
    rng = np.random.default_rng(seed)
    X = random_slice_points(T, spec, samples, rng, spread=1.0)
    Fx = params.alpha * _contract(T, spec, X)
    if params.beta:
        Fx += params.beta * (G.normalized_adjacency @ X)
    y = params.gamma * np.asarray(y_eps, dtype=float)
    return float(np.max(Fx / y[:, None]))
