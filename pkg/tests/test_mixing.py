import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nhols import DomainError, InvalidParam, MixingSpec, parse_mixing
from nhols.mixing import (
    ARITHMETIC,
    GEOMETRIC,
    HARMONIC,
    L2,
    MAXIMUM,
    STANDARD_KINDS,
    check_one_homogeneity,
    check_order_preservation,
    check_positivity,
    check_symmetry,
    sigma_eval,
)

positive = st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("spec,expected", [
    (ARITHMETIC, 4.0),
    (HARMONIC, 3.0),
    (L2, 2 * np.sqrt(5)),
    (GEOMETRIC, 2 * np.sqrt(3)),
    (MAXIMUM, 6.0),
])
def test_values_at_one_three(spec, expected):
    assert sigma_eval(spec, 1.0, 3.0) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("spec", STANDARD_KINDS, ids=lambda s: s.label)
@settings(max_examples=200, deadline=None)
@given(a=positive, b=positive)
def test_matches_oracle(spec, a, b):
    assert sigma_eval(spec, a, b) == pytest.approx(float(oracles.sigma(spec.kind, a, b)), rel=1e-12)


@pytest.mark.parametrize("p", [-3.0, -0.5, 0.5, 1.5, 3.0, 7.0])
def test_pmean_matches_oracle(p):
    rng = np.random.default_rng(1)
    a, b = rng.uniform(0.1, 5, 200), rng.uniform(0.1, 5, 200)
    np.testing.assert_allclose(MixingSpec.pmean(p)(a, b), oracles.sigma(("pmean", p), a, b), rtol=1e-12)


def test_pmean_log_space_handles_large_exponent():
    val = MixingSpec.pmean(400.0)(np.array([10.0]), np.array([20.0]))
    assert np.isfinite(val[0]) and val[0] == pytest.approx(40.0, rel=1e-2)


@pytest.mark.parametrize("spec", STANDARD_KINDS + (MixingSpec.pmean(3.0),), ids=lambda s: s.label)
def test_samplers_pass(spec):
    for check in (check_one_homogeneity, check_positivity, check_symmetry, check_order_preservation):
        res = check(spec, 1000, 3)
        assert res.passed, (check.__name__, res.max_violation)


def test_affine_breaks_homogeneity():
    spec = MixingSpec.custom(lambda a, b: a + b + 1, validate=False)
    assert not check_one_homogeneity(spec, 1000, 0).passed


def test_difference_breaks_positivity():
    spec = MixingSpec.custom(lambda a, b: a - b, validate=False)
    assert not check_positivity(spec, 1000, 0).passed


def test_custom_validation_rejects():
    with pytest.raises(InvalidParam):
        MixingSpec.custom(lambda a, b: a + b + 1)
    with pytest.raises(InvalidParam):
        # homogeneous and positive, but decreasing in one argument
        MixingSpec.custom(lambda a, b: a * a / b)


def test_custom_validation_accepts():
    spec = MixingSpec.custom(lambda a, b: np.sqrt(a * a + a * b + b * b), name="mixed")
    assert spec.label == "mixed"


def test_sampler_needs_samples():
    with pytest.raises(InvalidParam):
        check_positivity(ARITHMETIC, 0)


def test_monotone_in_p():
    rng = np.random.default_rng(5)
    a, b = rng.uniform(0.1, 10, 500), rng.uniform(0.1, 10, 500)
    keep = np.abs(a - b) > 1e-3
    a, b = a[keep], b[keep]
    vals = [spec(a, b) for spec in (HARMONIC, GEOMETRIC, ARITHMETIC, L2, MAXIMUM)]
    for lo, hi in zip(vals, vals[1:]):
        assert np.all(lo < hi)


@pytest.mark.parametrize("spec", STANDARD_KINDS + (MixingSpec.pmean(-2.5), MixingSpec.pmean(4.0)),
                         ids=lambda s: s.label)
def test_diagonal(spec):
    a = np.geomspace(1e-4, 1e4, 50)
    np.testing.assert_allclose(spec(a, a), 2 * a, rtol=1e-14)


def test_limits():
    rng = np.random.default_rng(2)
    a, b = rng.uniform(0.1, 10, 300), rng.uniform(0.1, 10, 300)
    geo = GEOMETRIC(a, b)
    for p in (1e-6, -1e-6):
        np.testing.assert_allclose(MixingSpec.pmean(p)(a, b), geo, rtol=1e-4)
    # the gap to the maximum is at most 1 - 2**(-1/p), reached as min/max -> 0
    for p in (10.0, 50.0, 200.0):
        gap = 1 - MixingSpec.pmean(p)(a, b) / MAXIMUM(a, b)
        assert np.all(gap >= 0) and np.all(gap <= 1 - 2 ** (-1 / p) + 1e-15)
    far = MixingSpec.pmean(50)(np.array([1.0]), np.array([1e-9]))[0] / 2.0
    assert far == pytest.approx(2 ** (-1 / 50), rel=1e-12)
    # below the switch-over the closed geometric form is used
    np.testing.assert_array_equal(MixingSpec.pmean(1e-9)(a, b), geo)


def test_domain():
    with pytest.raises(DomainError):
        sigma_eval(ARITHMETIC, -1.0, 2.0)
    with pytest.raises(DomainError):
        sigma_eval(MixingSpec.pmean(-2.0), 0.0, 2.0)
    assert sigma_eval(HARMONIC, 0.0, 2.0) == 0.0
    assert sigma_eval(MAXIMUM, 0.0, 2.0) == 4.0
    assert sigma_eval(GEOMETRIC, 0.0, 2.0) == 0.0


def test_differentiable_flags():
    assert not MAXIMUM.differentiable
    assert all(s.differentiable for s in (ARITHMETIC, HARMONIC, L2, GEOMETRIC))


@pytest.mark.parametrize("text,kind,p", [
    ("arith", "arith", 1.0), ("HARM", "harm", -1.0), ("l2", "l2", 2.0), ("geom", "geom", 0.0),
    ("max", "max", np.inf), ("pmean:3", "pmean", 3.0), ("pmean:-0.5", "pmean", -0.5),
])
def test_parse(text, kind, p):
    spec = parse_mixing(text)
    assert spec.kind == kind and spec.p == p


@pytest.mark.parametrize("text", ["mean", "pmean:", "pmean:x", ""])
def test_parse_errors(text):
    with pytest.raises(InvalidParam):
        parse_mixing(text)
