import numpy as np

from nhols import MAXIMUM, phi
from nhols.validation import (
    check_clique_expansion,
    check_energy_identity,
    check_standard_ls,
    iterate_from,
    random_instance,
    run_validation,
)


def test_random_instance_covers_every_node(rng):
    for _ in range(10):
        inst = random_instance(rng)
        assert np.all(inst.T.hyper_degrees > 0) and np.all(inst.G.degrees > 0)
        assert np.all(inst.y_eps > 0)


def test_random_instance_deterministic():
    a = random_instance(np.random.default_rng(3), n=25)
    b = random_instance(np.random.default_rng(3), n=25)
    np.testing.assert_array_equal(a.T.triples, b.T.triples)
    np.testing.assert_array_equal(a.y_eps, b.y_eps)


def test_iterate_from_records_steps(rng):
    inst = random_instance(rng, n=20)
    F, iters, steps = iterate_from(inst, MAXIMUM, 0.5, 0.3, np.ones((20, 2)), tol=1e-10)
    assert len(steps) == 2 and all(len(s) == i for s, i in zip(steps, iters))
    np.testing.assert_allclose(phi(inst.T, MAXIMUM, F[:, 0]), 1.0, atol=1e-12)


def test_small_checks_pass():
    assert check_clique_expansion(instances=3, seed=2).passed
    assert check_energy_identity(pairs=10, seed=2).passed
    assert check_standard_ls(instances=3, seed=2).passed


def test_quick_report_shape():
    report = run_validation(seed=1, quick=True)
    names = [c["name"] for c in report["checks"]]
    assert "fixed-point optimality" in names and len(names) == 7
    assert report["passed"] == all(c["passed"] for c in report["checks"])
    line = {c["name"]: c for c in report["checks"]}
    assert line["clique-expansion equivalence"]["passed"]
