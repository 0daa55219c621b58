"""Numerical checks of the convergence and optimality properties of NHOLS.

Each ``check_*`` function draws random instances, measures one property and
returns a :class:`CheckOutcome`.  :func:`run_validation` bundles them into a
JSON-ready report for the ``validate`` command.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .mixing import ARITHMETIC, GEOMETRIC, HARMONIC, L2, MAXIMUM, MixingSpec
from .objective import (
    LossParams,
    clique_expansion_matrix,
    contraction_audit,
    energy_E2,
    finite_diff_gradient,
    loss_theta,
    loss_theta_tilde,
)
from .spreading import SpreadParams, _contract, _phi, apply_hyper_operator, phi, smooth_labels, standard_ls_batch
from .structures import SparseGraph, TriangleTensor, build_graph, build_triangle_tensor

__all__ = [
    "FIVE_KINDS",
    "DIFFERENTIABLE_KINDS",
    "Instance",
    "CheckOutcome",
    "random_instance",
    "iterate_from",
    "check_clique_expansion",
    "check_convergence",
    "check_contraction",
    "check_fixed_point_optimality",
    "check_energy_identity",
    "check_standard_ls",
    "run_validation",
]

FIVE_KINDS = (ARITHMETIC, HARMONIC, L2, GEOMETRIC, MAXIMUM)
DIFFERENTIABLE_KINDS = (ARITHMETIC, HARMONIC, L2, GEOMETRIC)


@dataclass(frozen=True, eq=False)
class Instance:
    G: SparseGraph
    T: TriangleTensor
    y_eps: np.ndarray


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: {self.value:.3g} (tolerance {self.tolerance:g})"


def random_instance(rng, n: int | None = None, n_range=(10, 60), weighted: bool = True,
                    epsilon: float = 0.01) -> Instance:
    """Random graph plus triangle set on ``n`` nodes, every node in some triangle.

    Triangles are random triples; each triangle's three edges are put in the
    graph, plus about ``n`` random extra edges.  Weights are uniform on
    ``[0.5, 2]`` when ``weighted``.  ``y_eps`` is a smoothed random 0/1 column
    with about a tenth of the nodes marked.
    """
    if n is None:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(n, 3 * n + 1))
    tri = np.array([rng.choice(n, 3, replace=False) for _ in range(m)])
    covered = np.zeros(n, dtype=bool)
    covered[tri.ravel()] = True
    extra = [np.concatenate([[i], rng.choice(np.delete(np.arange(n), i), 2, replace=False)])
             for i in np.flatnonzero(~covered)]
    if extra:
        tri = np.vstack([tri, np.array(extra)])
    tri = np.unique(np.sort(tri, axis=1), axis=0)
    tau = rng.uniform(0.5, 2.0, len(tri)) if weighted else np.ones(len(tri))
    T = build_triangle_tensor(np.column_stack([tri, tau]), n)

    pairs = np.vstack([tri[:, [0, 1]], tri[:, [0, 2]], tri[:, [1, 2]]])
    u = rng.integers(0, n, n)
    v = rng.integers(0, n, n)
    keep = u != v
    pairs = np.vstack([pairs, np.sort(np.column_stack([u[keep], v[keep]]), axis=1)])
    pairs = np.unique(pairs, axis=0)
    w = rng.uniform(0.5, 2.0, len(pairs)) if weighted else np.ones(len(pairs))
    G = build_graph(np.column_stack([pairs, w]), n=n)

    col = np.zeros(n)
    col[rng.choice(n, size=max(1, n // 10), replace=False)] = 1.0
    return Instance(G, T, smooth_labels(col, epsilon))


def _normalized_anchor(inst, spec):
    return inst.y_eps / phi(inst.T, spec, inst.y_eps)


def iterate_from(inst: Instance, spec: MixingSpec, alpha: float, beta: float, F0, anchor=None,
                 tol: float = 1e-10, max_iters: int = 500):
    """Run the normalized iteration on the columns of ``F0`` and keep Hilbert step lengths.

    Returns ``(F, iterations, steps)`` where ``steps[c]`` lists
    ``d(f^(r+1), f^(r))`` for column ``c``.  ``anchor`` defaults to the
    phi-normalized smoothed labels.
    """
    T, G = inst.T, inst.G
    y = _normalized_anchor(inst, spec) if anchor is None else np.asarray(anchor, dtype=float)
    gamma = 1.0 - alpha - beta
    F = np.array(F0, dtype=float, copy=True)
    C = F.shape[1]
    iters = np.zeros(C, dtype=np.int64)
    steps = [[] for _ in range(C)]
    active = np.arange(C)
    for _ in range(max_iters):
        Fa = F[:, active]
        g = alpha * _contract(T, spec, Fa) + gamma * y[:, None]
        if beta:
            g += beta * (G.normalized_adjacency @ Fa)
        Fn = g / _phi(T, spec, g)
        rc = np.linalg.norm(Fn - Fa, axis=0) / np.linalg.norm(Fn, axis=0)
        r = np.log(Fn) - np.log(Fa)
        d = r.max(axis=0) - r.min(axis=0)
        for k, c in enumerate(active):
            steps[c].append(float(d[k]))
        F[:, active] = Fn
        iters[active] += 1
        active = active[rc >= tol]
        if active.size == 0:
            break
    return F, iters, steps


def _strictly_decreasing(seq, floor: float = 1e-13) -> bool:
    """True if ``seq`` strictly decreases until it reaches ``floor`` (rounding noise)."""
    for a, b in zip(seq, seq[1:]):
        if a <= floor:
            break
        if not b < a:
            return False
    return True


def check_clique_expansion(instances: int = 50, seed: int = 0, max_n: int = 200) -> CheckOutcome:
    """``S_arith(f)`` against the dense clique-expansion operator, relative max-norm."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        inst = random_instance(rng, n_range=(10, max_n))
        f = rng.uniform(0.1, 2.0, inst.T.n)
        Tf = clique_expansion_matrix(inst.T) @ f
        err = np.max(np.abs(apply_hyper_operator(inst.T, ARITHMETIC, f) - Tf)) / np.max(np.abs(Tf))
        worst = max(worst, float(err))
    return CheckOutcome("clique-expansion equivalence", worst <= 1e-12, worst, 1e-12,
                        {"instances": instances}, time.perf_counter() - t0)


def _grid_point(rng):
    a = float(rng.choice([0.3, 0.4, 0.5, 0.6, 0.7, 0.8]))
    b = float(rng.choice([x for x in (0.1, 0.25, 0.40, 0.55) if a + x < 1 - 1e-12]))
    return a, b


def check_convergence(instances: int = 20, starts: int = 10, seed: int = 0, kinds=FIVE_KINDS,
                      tol: float = 1e-10, max_iters: int = 500, n_range=(10, 60)):
    """Random positive starts reach one limit with ``phi = 1``; Hilbert steps shrink.

    Returns two outcomes: uniqueness/normalization, and monotone step lengths.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_spread = worst_phi = 0.0
    non_converged = non_monotone = runs = 0
    for _ in range(instances):
        inst = random_instance(rng, n_range=n_range)
        a, b = _grid_point(rng)
        for spec in kinds:
            F0 = np.exp(rng.normal(0.0, 1.0, (inst.T.n, starts)))
            F, iters, steps = iterate_from(inst, spec, a, b, F0, tol=tol, max_iters=max_iters)
            runs += starts
            non_converged += int(np.sum(iters >= max_iters))
            ref = F[:, 0]
            spread = np.max(np.abs(F - ref[:, None])) / np.max(np.abs(ref))
            worst_spread = max(worst_spread, float(spread))
            worst_phi = max(worst_phi, float(np.max(np.abs(_phi(inst.T, spec, F) - 1.0))))
            non_monotone += sum(not _strictly_decreasing(s) for s in steps)
    secs = time.perf_counter() - t0
    uniq = CheckOutcome("convergence and uniqueness", worst_spread <= 1e-6 and worst_phi <= 1e-10
                        and non_converged == 0, worst_spread, 1e-6,
                        {"max_phi_error": worst_phi, "non_converged": non_converged, "runs": runs}, secs)
    mono = CheckOutcome("Hilbert step lengths strictly decrease", non_monotone == 0, float(non_monotone), 0.0,
                        {"runs": runs}, secs)
    return uniq, mono


def check_contraction(instances: int = 20, trials: int = 1000, seed: int = 0, kinds=FIVE_KINDS,
                      n_range=(10, 60)) -> CheckOutcome:
    """Largest Hilbert-metric ratio ``d(step u, step v) / d(u, v)`` over sampled pairs."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        inst = random_instance(rng, n_range=n_range)
        a, b = _grid_point(rng)
        for spec in kinds:
            params = SpreadParams(a, b, 1.0 - a - b)
            res = contraction_audit(inst.G, inst.T, spec, params, trials=trials, seed=seed * 1000 + i,
                                    y_eps=inst.y_eps)
            worst = max(worst, res.max_ratio)
    return CheckOutcome("Hilbert-metric contraction", worst < 1.0, worst, 1.0,
                        {"instances": instances, "trials": trials}, time.perf_counter() - t0)


def check_fixed_point_optimality(instances: int = 5, samples: int = 1000, seed: int = 0,
                                 kinds=DIFFERENTIABLE_KINDS, n_range=(8, 20)) -> CheckOutcome:
    """Finite-difference gradient of the modified loss at the limit, and slice optimality.

    The limit is computed with the phi-normalized anchor (the loss is anchored
    there).  ``value`` is the largest ``||grad||_inf / ||f*||_inf``.  Slice
    samples perturb the limit multiplicatively with log-scales drawn
    log-uniformly from ``[1e-3, 1]`` and are renormalized to ``phi = 1``; the
    detail counts samples whose loss is not above the loss at the limit, and the
    largest gradient component tangent to the slice.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_grad = worst_tan = 0.0
    beaten = 0
    total = 0
    for _ in range(instances):
        inst = random_instance(rng, n_range=n_range)
        a, b = _grid_point(rng)
        for spec in kinds:
            F, _, _ = iterate_from(inst, spec, a, b, _normalized_anchor(inst, spec)[:, None], tol=1e-13,
                                   max_iters=5000)
            f = F[:, 0]
            fmax = float(np.max(np.abs(f)))
            lp = LossParams.from_params(inst.T, spec, SpreadParams(a, b, 1.0 - a - b), inst.y_eps)
            grad = finite_diff_gradient(lambda x: loss_theta_tilde(inst.G, inst.T, spec, lp, x), f)
            worst_grad = max(worst_grad, float(np.max(np.abs(grad))) / fmax)
            normal = finite_diff_gradient(lambda x: phi(inst.T, spec, x), f)
            normal /= np.linalg.norm(normal)
            tangent = grad - (grad @ normal) * normal
            worst_tan = max(worst_tan, float(np.max(np.abs(tangent))) / fmax)

            best = loss_theta(inst.G, inst.T, spec, lp, f)
            scales = np.exp(rng.uniform(np.log(1e-3), 0.0, samples))
            X = f[:, None] * np.exp(rng.normal(0.0, 1.0, (inst.T.n, samples)) * scales)
            X /= _phi(inst.T, spec, X)
            vals = np.array([loss_theta(inst.G, inst.T, spec, lp, X[:, k]) for k in range(samples)])
            beaten += int(np.sum(vals <= best))
            total += samples
    passed = worst_grad <= 1e-4 and beaten == 0
    return CheckOutcome("fixed-point optimality", passed, worst_grad, 1e-4,
                        {"slice_samples_not_worse": beaten, "slice_samples": total,
                         "max_tangential_gradient": worst_tan}, time.perf_counter() - t0)


def check_energy_identity(pairs: int = 100, seed: int = 0, kinds=FIVE_KINDS, n_range=(10, 60)) -> CheckOutcome:
    """``f.(D_H f - A sigma(f)) = E2(D_H^{1/2} f) - phi(D_H^{1/2} f)^2``, relative error."""
    from .objective import hyper_energy

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(pairs):
        inst = random_instance(rng, n_range=n_range)
        spec = kinds[k % len(kinds)]
        f = rng.uniform(0.1, 2.0, inst.T.n)
        lhs = 2.0 * hyper_energy(inst.T, spec, f)
        g = np.sqrt(inst.T.hyper_degrees) * f
        rhs = energy_E2(inst.T, spec, g) - phi(inst.T, spec, g) ** 2
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return CheckOutcome("tensor energy identity", worst <= 1e-9, float(worst), 1e-9, {"pairs": pairs},
                        time.perf_counter() - t0)


def check_standard_ls(instances: int = 20, seed: int = 0, n_range=(10, 60)) -> CheckOutcome:
    """Stationarity residual of standard LS at ``tol = 1e-5`` plus the 2-node closed form."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        inst = random_instance(rng, n_range=n_range)
        c = int(rng.integers(2, 5))
        Y = np.zeros((inst.G.n, c))
        Y[rng.choice(inst.G.n, c, replace=False), np.arange(c)] = 1.0
        beta = float(rng.choice(np.arange(1, 10) / 10))
        res = standard_ls_batch(inst.G, beta, Y, tol=1e-5, max_iters=100000, record=False)
        resid = res.F - beta * (inst.G.normalized_adjacency @ res.F) - (1.0 - beta) * Y
        worst = max(worst, float(np.max(np.abs(resid))))
    G2 = build_graph([(0, 1, 1.0)], n=2)
    two = standard_ls_batch(G2, 0.5, np.array([[1.0], [0.0]]), tol=0.0, max_iters=200, record=False).F[:, 0]
    err2 = float(np.max(np.abs(two - np.array([2.0 / 3.0, 1.0 / 3.0]))))
    passed = worst <= 1e-4 and err2 <= 1e-10
    return CheckOutcome("standard LS stationarity", passed, worst, 1e-4, {"two_node_error": err2},
                        time.perf_counter() - t0)


def run_validation(seed: int = 0, quick: bool = False) -> dict:
    """Run every check; ``quick`` shrinks instance counts for a smoke run."""
    s = 0.2 if quick else 1.0

    def k(x):
        return max(1, int(round(x * s)))

    outcomes = [check_clique_expansion(k(50), seed)]
    outcomes.extend(check_convergence(k(20), 10, seed))
    outcomes.append(check_contraction(k(20), k(1000), seed))
    outcomes.append(check_fixed_point_optimality(k(5), k(1000), seed))
    outcomes.append(check_energy_identity(k(100), seed))
    outcomes.append(check_standard_ls(k(20), seed))
    return {"seed": seed, "quick": quick, "passed": all(o.passed for o in outcomes),
            "checks": [asdict(o) for o in outcomes]}
