import numpy as np
import pytest

import oracles
from conftest import graph_from_case, tensor_from_case
from nhols import (
    ARITHMETIC,
    GEOMETRIC,
    HARMONIC,
    L2,
    MAXIMUM,
    STANDARD_KINDS,
    DomainError,
    InvalidParam,
    ShapeError,
    SpreadParams,
    build_graph,
    build_triangle_tensor,
    nhols_step,
    phi,
)
from nhols.objective import (
    LossParams,
    anchor_bound_constant,
    clique_expansion_matrix,
    contraction_audit,
    energy_E1,
    energy_E2,
    finite_diff_gradient,
    hilbert_distance,
    hyper_energy,
    hyper_energy_gradient,
    log_ratio_bound,
    loss_theta,
    loss_theta_tilde,
    random_slice_points,
    standard_ls_gradient,
    standard_ls_loss,
    theta_tilde_gradient_closed_form,
)
from nhols.validation import random_instance

KIND_IDS = [s.label for s in STANDARD_KINDS]
SMOOTH = (ARITHMETIC, HARMONIC, L2, GEOMETRIC)


class TestEnergyE1:
    def test_harmonic_vector(self, rng):
        inst = random_instance(rng, n=20)
        assert energy_E1(inst.G, np.sqrt(inst.G.degrees)) == pytest.approx(0.0, abs=1e-12)

    def test_two_nodes(self):
        assert energy_E1(build_graph([(0, 1)], n=2), np.array([1.0, 0.0])) == 2.0

    def test_frozen(self, frozen):
        c = frozen["random_8"]
        assert energy_E1(graph_from_case(c), np.array(c["f"])) == pytest.approx(c["E1"], rel=1e-13)

    def test_quadratic_form(self, rng):
        inst = random_instance(rng, n=30)
        for _ in range(5):
            f = rng.normal(size=30)
            val = energy_E1(inst.G, f)
            assert val >= 0
            assert val == pytest.approx(2 * (f @ f - f @ (inst.G.normalized_adjacency @ f)), rel=1e-10)

    def test_shape(self):
        with pytest.raises(ShapeError):
            energy_E1(build_graph([(0, 1)], n=2), np.ones(3))


class TestEnergyE2:
    def test_single_triangle_zero(self):
        T = build_triangle_tensor([(0, 1, 2)], 3)
        assert energy_E2(T, ARITHMETIC, np.full(3, np.sqrt(2))) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("case", ["single_triangle", "shared_edge", "weighted_pair", "random_8", "random_12"])
    @pytest.mark.parametrize("spec", STANDARD_KINDS, ids=KIND_IDS)
    def test_frozen(self, frozen, case, spec):
        c = frozen[case]
        got = energy_E2(tensor_from_case(c), spec, np.array(c["f"]))
        assert got == pytest.approx(c["E2"][spec.kind], rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("spec", STANDARD_KINDS, ids=KIND_IDS)
    def test_nonnegative(self, spec, rng):
        inst = random_instance(rng, n=25)
        for _ in range(10):
            assert energy_E2(inst.T, spec, rng.uniform(0.01, 5, 25)) >= 0

    @pytest.mark.parametrize("spec", STANDARD_KINDS, ids=KIND_IDS)
    def test_energy_identity(self, spec, rng):
        # f.(D_H f - A sigma(f)) = E2(D_H^{1/2} f) - phi(D_H^{1/2} f)^2
        for _ in range(20):
            inst = random_instance(rng)
            f = rng.uniform(0.1, 2, inst.T.n)
            lhs = 2 * hyper_energy(inst.T, spec, f)
            g = np.sqrt(inst.T.hyper_degrees) * f
            rhs = energy_E2(inst.T, spec, g) - phi(inst.T, spec, g) ** 2
            assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs))

    def test_energy_identity_against_dense(self, frozen):
        c = frozen["random_12"]
        A3 = oracles.dense_tensor(c["triples"], c["n"])
        f = np.array(c["f"])
        d = oracles.hyper_degrees(A3)
        for kind in ("arith", "harm", "l2", "geom", "max"):
            Asig = np.einsum("ijk,jk->i", A3, oracles.sigma(kind, f[:, None], f[None, :]))
            lhs = f @ (d * f - Asig)
            g = np.sqrt(d) * f
            rhs = oracles.energy_e2(A3, kind, g) - oracles.phi(A3, kind, g) ** 2
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_domain(self):
        T = build_triangle_tensor([(0, 1, 2)], 3)
        with pytest.raises(DomainError):
            energy_E2(T, ARITHMETIC, np.array([1.0, -1.0, 1.0]))


def _setup(seed=0, spec=MAXIMUM, alpha=0.5, beta=0.3, n=20):
    inst = random_instance(np.random.default_rng(seed), n=n)
    params = SpreadParams(alpha, beta, 1 - alpha - beta)
    return inst, params, LossParams.from_params(inst.T, spec, params, inst.y_eps)


class TestLoss:
    def test_loss_params(self):
        inst, params, lp = _setup()
        assert phi(inst.T, MAXIMUM, lp.y_tilde) == pytest.approx(1.0, abs=1e-12)
        h = lp.step
        assert (1 - h) / h == pytest.approx(lp.lam + lp.mu)

    def test_plain_distance_when_unregularized(self, rng):
        inst, _, lp = _setup()
        lp0 = LossParams(0.0, 0.0, lp.y_tilde)
        assert loss_theta(inst.G, inst.T, MAXIMUM, lp0, lp.y_tilde) == 0.0
        for _ in range(10):
            f = lp.y_tilde * rng.uniform(0.5, 1.5, inst.T.n)
            assert loss_theta(inst.G, inst.T, MAXIMUM, lp0, f) > 0

    def test_continuity(self):
        inst, _, lp = _setup()
        f = lp.y_tilde + 0.3
        base = loss_theta(inst.G, inst.T, L2, lp, f)
        diffs = []
        for h in (1e-2, 1e-4, 1e-6, 1e-8):
            e = np.zeros_like(f)
            e[3] = h
            diffs.append(abs(loss_theta(inst.G, inst.T, L2, lp, f + e) - base))
        assert diffs[-1] < 1e-6 and all(b <= a for a, b in zip(diffs, diffs[1:]))

    def test_tilde_without_tensor_term(self):
        inst, _, lp = _setup()
        lp0 = LossParams(lp.lam, 0.0, lp.y_tilde)
        f = lp.y_tilde * 1.3
        assert loss_theta_tilde(inst.G, inst.T, MAXIMUM, lp0, f) == loss_theta(inst.G, inst.T, MAXIMUM, lp0, f)

    @pytest.mark.parametrize("spec", STANDARD_KINDS, ids=KIND_IDS)
    def test_tilde_constant_offset_on_slice(self, spec, rng):
        inst, _, lp = _setup(spec=spec)
        X = random_slice_points(inst.T, spec, 20, rng)
        for k in range(20):
            f = X[:, k]
            diff = loss_theta(inst.G, inst.T, spec, lp, f) - loss_theta_tilde(inst.G, inst.T, spec, lp, f)
            assert diff == pytest.approx(lp.mu / 2, rel=1e-10)
        # same minimizer over the sample family
        th = [loss_theta(inst.G, inst.T, spec, lp, X[:, k]) for k in range(20)]
        tt = [loss_theta_tilde(inst.G, inst.T, spec, lp, X[:, k]) for k in range(20)]
        assert np.argmin(th) == np.argmin(tt)

    def test_gradient_step_is_nhols_step_for_linear_mixing(self):
        inst, params, lp = _setup(spec=ARITHMETIC, alpha=0.6, beta=0.0, n=15)
        f = np.random.default_rng(1).uniform(0.2, 2, 15)
        grad = finite_diff_gradient(lambda x: loss_theta_tilde(inst.G, inst.T, ARITHMETIC, lp, x), f)
        closed = theta_tilde_gradient_closed_form(inst.G, inst.T, ARITHMETIC, lp, f)
        np.testing.assert_allclose(grad, closed, rtol=1e-5, atol=1e-5 * np.max(np.abs(closed)))
        moved = f - lp.step * grad
        step, _ = nhols_step(inst.G, inst.T, ARITHMETIC, params, lp.y_tilde, f)
        np.testing.assert_allclose(moved / phi(inst.T, ARITHMETIC, moved), step, rtol=1e-5)

    def test_graph_term_counts_each_edge_twice(self):
        # E1 sums over ordered pairs, so lam/2 * E1 has gradient 2 lam (I - S) f,
        # twice the graph term of the closed form
        inst, params, lp = _setup(spec=ARITHMETIC, alpha=0.4, beta=0.3, n=15)
        f = np.random.default_rng(1).uniform(0.2, 2, 15)
        grad = finite_diff_gradient(lambda x: loss_theta_tilde(inst.G, inst.T, ARITHMETIC, lp, x), f)
        closed = theta_tilde_gradient_closed_form(inst.G, inst.T, ARITHMETIC, lp, f)
        extra = lp.lam * (f - inst.G.normalized_adjacency @ f)
        np.testing.assert_allclose(grad, closed + extra, rtol=1e-5, atol=1e-5 * np.max(np.abs(grad)))

    @pytest.mark.parametrize("spec", [HARMONIC, L2, GEOMETRIC], ids=["harm", "l2", "geom"])
    def test_closed_form_gradient_is_not_the_gradient_for_nonlinear_mixing(self, spec):
        # the projected-gradient reading of the iteration relies on Euler's identity,
        # which yields J f, while the gradient of the tensor energy involves J^T f
        inst, _, lp = _setup(spec=spec, n=15)
        f = np.random.default_rng(2).uniform(0.2, 2, 15)
        grad = finite_diff_gradient(lambda x: loss_theta_tilde(inst.G, inst.T, spec, lp, x), f)
        closed = theta_tilde_gradient_closed_form(inst.G, inst.T, spec, lp, f)
        assert np.max(np.abs(grad - closed)) > 1e-3 * np.max(np.abs(grad))


class TestHyperEnergyGradient:
    @pytest.mark.parametrize("spec", SMOOTH, ids=["arith", "harm", "l2", "geom"])
    def test_exact_gradient(self, spec, rng):
        for _ in range(3):
            inst = random_instance(rng, n_range=(8, 50))
            f = rng.uniform(0.2, 2, inst.T.n)
            fd = finite_diff_gradient(lambda x: hyper_energy(inst.T, spec, x), f)
            ex = hyper_energy_gradient(inst.T, spec, f, exact=True)
            np.testing.assert_allclose(ex, fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(fd)))

    def test_euler_form_exact_for_linear_mixing(self, rng):
        inst = random_instance(rng, n=30)
        f = rng.uniform(0.2, 2, 30)
        fd = finite_diff_gradient(lambda x: hyper_energy(inst.T, ARITHMETIC, x), f)
        np.testing.assert_allclose(hyper_energy_gradient(inst.T, ARITHMETIC, f), fd, rtol=1e-5,
                                   atol=1e-5 * np.max(np.abs(fd)))

    @pytest.mark.parametrize("spec", [HARMONIC, L2, GEOMETRIC], ids=["harm", "l2", "geom"])
    def test_euler_form_differs_for_nonlinear_mixing(self, spec, rng):
        inst = random_instance(rng, n=30)
        f = rng.uniform(0.2, 2, 30)
        fd = finite_diff_gradient(lambda x: hyper_energy(inst.T, spec, x), f)
        euler = hyper_energy_gradient(inst.T, spec, f)
        assert np.max(np.abs(euler - fd)) > 1e-3 * np.max(np.abs(fd))

    @pytest.mark.parametrize("spec", SMOOTH, ids=["arith", "harm", "l2", "geom"])
    def test_forms_agree_on_constant_profile(self, spec):
        # on a constant vector every sigma is evaluated on the diagonal, where J^T f = J f
        inst = random_instance(np.random.default_rng(4), n=20)
        f = np.full(20, 0.7)
        np.testing.assert_allclose(hyper_energy_gradient(inst.T, spec, f),
                                   hyper_energy_gradient(inst.T, spec, f, exact=True), atol=1e-6)


class TestFiniteDiff:
    def test_quadratic(self, rng):
        f = rng.normal(size=10)
        np.testing.assert_allclose(finite_diff_gradient(lambda x: 0.5 * x @ x, f), f, atol=1e-8)

    def test_step_shrinks_near_boundary(self):
        def log_sum(x):
            if np.any(x <= 0):
                raise DomainError("outside")
            return float(np.sum(np.log(x)))

        f = np.array([5e-7, 1.0])
        # the shrunk step is 1e-7, a fifth of f_0: central differences stay within 2%
        np.testing.assert_allclose(finite_diff_gradient(log_sum, f), 1 / f, rtol=2e-2)
        with pytest.raises(DomainError):
            finite_diff_gradient(log_sum, np.array([1e-8, 1.0]), step=1e-6)

    def test_bad_step(self):
        with pytest.raises(InvalidParam):
            finite_diff_gradient(lambda x: 0.0, np.ones(2), step=0.0)


class TestHilbert:
    def test_example(self):
        assert hilbert_distance([1, 2], [1, 1]) == pytest.approx(np.log(2))

    def test_projective(self, rng):
        u = rng.uniform(0.1, 3, 10)
        assert hilbert_distance(u, 4.2 * u) == pytest.approx(0.0, abs=1e-14)

    def test_metric_axioms(self, rng):
        for _ in range(500):
            u, v, w = (rng.uniform(0.01, 5, 6) for _ in range(3))
            assert hilbert_distance(u, v) == pytest.approx(hilbert_distance(v, u), rel=1e-14)
            assert hilbert_distance(u, w) <= hilbert_distance(u, v) + hilbert_distance(v, w) + 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            hilbert_distance([1, 0], [1, 1])
        with pytest.raises(ShapeError):
            hilbert_distance([1, 2], [1, 2, 3])


class TestContraction:
    @pytest.mark.parametrize("spec", STANDARD_KINDS, ids=KIND_IDS)
    def test_audit_below_one(self, spec, rng):
        inst = random_instance(rng, n=25)
        res = contraction_audit(inst.G, inst.T, spec, SpreadParams(0.6, 0.25, 0.15), trials=200, seed=1,
                                y_eps=inst.y_eps)
        assert res.passed and res.max_ratio < 1 and res.trials == 200

    def test_pure_anchor_is_constant(self, rng):
        inst = random_instance(rng, n=20)
        res = contraction_audit(inst.G, inst.T, MAXIMUM, SpreadParams(0.0, 0.0, 1.0), trials=50)
        assert res.max_ratio == pytest.approx(0.0, abs=1e-12)

    def test_log_ratio_bound(self):
        rng = np.random.default_rng(0)
        a = np.exp(rng.uniform(-5, 5, 100_000))
        b = a * np.exp(-rng.uniform(0, 5, 100_000))
        c = np.exp(rng.uniform(-5, 5, 100_000))
        lhs, rhs = log_ratio_bound(a, b, c)
        assert np.all(lhs <= rhs + 1e-12 * np.abs(rhs))

    def test_anchor_bound_constant(self):
        inst = random_instance(np.random.default_rng(1), n=20)
        C = anchor_bound_constant(inst.G, inst.T, MAXIMUM, SpreadParams(0.5, 0.3, 0.2), inst.y_eps, samples=100)
        assert np.isfinite(C) and C > 0


class TestCliqueExpansion:
    def test_single_triangle(self):
        Th = clique_expansion_matrix(build_triangle_tensor([(0, 1, 2)], 3)).toarray()
        np.testing.assert_allclose(Th, np.ones((3, 3)) - np.eye(3), rtol=1e-15)

    def test_frozen(self, frozen):
        for case in ("shared_edge", "weighted_pair", "random_8", "random_12"):
            c = frozen[case]
            np.testing.assert_allclose(clique_expansion_matrix(tensor_from_case(c)).toarray(), c["theta_clique"],
                                       rtol=1e-13, atol=1e-15)

    def test_empty(self):
        assert clique_expansion_matrix(build_triangle_tensor([], 3)).nnz == 0


class TestStandardLsLoss:
    def test_unregularized_minimum(self, rng):
        G = build_graph([(0, 1), (1, 2)], n=3)
        y = rng.uniform(size=3)
        assert standard_ls_loss(G, y, y, 0.0) == 0.0
        assert standard_ls_loss(G, y + 0.1, y, 0.0) > 0

    def test_two_node_gradient(self):
        G = build_graph([(0, 1)], n=2)
        g = standard_ls_gradient(G, np.array([2 / 3, 1 / 3]), np.array([1.0, 0.0]), 1.0)
        np.testing.assert_allclose(g, 0.0, atol=1e-10)

    def test_gradient_matches_finite_differences(self, rng):
        inst = random_instance(rng, n=40)
        y = rng.uniform(size=40)
        f = rng.uniform(size=40)
        fd = finite_diff_gradient(lambda x: standard_ls_loss(inst.G, x, y, 2.5), f)
        np.testing.assert_allclose(standard_ls_gradient(inst.G, f, y, 2.5), fd, rtol=1e-5, atol=1e-8)

    def test_convex(self, rng):
        inst = random_instance(rng, n=30)
        y = rng.uniform(size=30)
        for _ in range(50):
            u, v = rng.normal(size=30), rng.normal(size=30)
            mid = standard_ls_loss(inst.G, (u + v) / 2, y, 3.0)
            assert mid <= (standard_ls_loss(inst.G, u, y, 3.0) + standard_ls_loss(inst.G, v, y, 3.0)) / 2 + 1e-12

    def test_ls_limit_is_stationary(self, rng):
        from nhols import standard_ls_run

        inst = random_instance(rng, n=30)
        y = np.zeros(30)
        y[:3] = 1
        res = standard_ls_run(inst.G, 0.8, 0.2, y[:, None], tol=1e-12, max_iters=10_000)
        g = standard_ls_gradient(inst.G, res.F[:, 0], y, 0.8 / 0.2)
        # the LS limit minimizes the loss scaled by 1/gamma
        assert np.max(np.abs(g)) <= 1e-9
