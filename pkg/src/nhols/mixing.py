"""Mixing functions: positive, one-homogeneous, symmetric maps of two values.

The built-in family is the generalized p-mean scaled by 2,

    sigma_p(a, b) = 2 * ((a**p + b**p) / 2) ** (1/p),

with the limits p -> 0 (2*sqrt(a*b)) and p -> inf (2*max(a, b)).  Every kind
satisfies sigma(a, a) = 2a.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidParam

__all__ = [
    "MixingSpec",
    "CheckResult",
    "ARITHMETIC",
    "HARMONIC",
    "L2",
    "GEOMETRIC",
    "MAXIMUM",
    "STANDARD_KINDS",
    "parse_mixing",
    "sigma_eval",
    "check_one_homogeneity",
    "check_positivity",
    "check_symmetry",
    "check_order_preservation",
]

_P_ZERO = 1e-8
_LOG2 = np.log(2.0)


def _pmean(a, b, p):
    if abs(p) < _P_ZERO:
        return 2.0 * np.sqrt(a * b)
    if np.isinf(p):
        return 2.0 * (np.maximum(a, b) if p > 0 else np.minimum(a, b))
    with np.errstate(divide="ignore"):
        la, lb = np.log(a), np.log(b)
    # log-space keeps a**p finite for large |p|
    return 2.0 * np.exp((np.logaddexp(p * la, p * lb) - _LOG2) / p)


def _harmonic(a, b):
    s = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        out = 4.0 * a * b / s
    return np.where(s > 0, out, 0.0)


_CLOSED_FORMS = {
    "arith": lambda a, b: a + b,
    "harm": _harmonic,
    "l2": lambda a, b: np.sqrt(2.0 * (a * a + b * b)),
    "geom": lambda a, b: 2.0 * np.sqrt(a * b),
    "max": lambda a, b: 2.0 * np.maximum(a, b),
}

_KIND_P = {"arith": 1.0, "harm": -1.0, "l2": 2.0, "geom": 0.0, "max": np.inf}


@dataclass(frozen=True)
class MixingSpec:
    """Identifies a mixing function.

    ``kind`` is one of ``arith``, ``harm``, ``l2``, ``geom``, ``max``, ``pmean``
    or ``custom``.  ``p`` is the mean exponent (``inf`` for the maximum); for
    ``custom`` the callable is stored in ``func``.
    """

    kind: str
    p: float = 1.0
    func: Callable | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind in _KIND_P:
            object.__setattr__(self, "p", _KIND_P[self.kind])
        elif self.kind == "pmean":
            if np.isnan(self.p):
                raise InvalidParam("p must not be NaN")
        elif self.kind == "custom":
            if self.func is None:
                raise InvalidParam("custom mixing needs a callable")
        else:
            raise InvalidParam(f"unknown mixing kind {self.kind!r}")

    @classmethod
    def pmean(cls, p: float) -> "MixingSpec":
        return cls("pmean", p=float(p))

    @classmethod
    def custom(cls, func: Callable, name: str = "custom", validate: bool = True, seed: int = 0) -> "MixingSpec":
        """Wrap a user function ``func(a, b)`` operating elementwise on arrays.

        With ``validate`` the function must pass the positivity, homogeneity,
        symmetry and order-preservation samplers, otherwise
        :class:`InvalidParam` is raised.
        """
        spec = cls("custom", p=np.nan, func=func, name=name)
        if validate:
            for check in (check_positivity, check_one_homogeneity, check_symmetry, check_order_preservation):
                res = check(spec, 1000, seed)
                if not res.passed:
                    raise InvalidParam(f"mixing function {name!r} fails {res.name} (max violation {res.max_violation:.3g})")
        return spec

    @property
    def label(self) -> str:
        if self.kind == "pmean":
            return f"pmean:{self.p:g}"
        if self.kind == "custom":
            return self.name or "custom"
        return self.kind

    @property
    def differentiable(self) -> bool:
        if self.kind == "custom":
            return False
        return bool(np.isfinite(self.p))

    @property
    def needs_positive(self) -> bool:
        """Whether zero arguments are outside the domain."""
        return self.kind == "pmean" and self.p < 0

    def __call__(self, a, b):
        """Vectorized evaluation without domain checks (hot path)."""
        if self.kind in _CLOSED_FORMS:
            return _CLOSED_FORMS[self.kind](a, b)
        if self.kind == "pmean":
            if self.p == 1.0:
                return a + b
            return _pmean(a, b, self.p)
        return self.func(a, b)


ARITHMETIC = MixingSpec("arith")
HARMONIC = MixingSpec("harm")
L2 = MixingSpec("l2")
GEOMETRIC = MixingSpec("geom")
MAXIMUM = MixingSpec("max")
STANDARD_KINDS = (ARITHMETIC, HARMONIC, L2, GEOMETRIC, MAXIMUM)


def parse_mixing(text: str) -> MixingSpec:
    """Parse a CLI name: ``arith``, ``harm``, ``l2``, ``geom``, ``max`` or ``pmean:<p>``."""
    text = text.strip().lower()
    if text in _KIND_P:
        return MixingSpec(text)
    if text.startswith("pmean:"):
        try:
            p = float(text.split(":", 1)[1])
        except ValueError:
            raise InvalidParam(f"bad exponent in {text!r}") from None
        return MixingSpec.pmean(p)
    raise InvalidParam(f"unknown mixing function {text!r}")


def sigma_eval(spec: MixingSpec, a, b):
    """Evaluate ``spec`` with domain checks.

    Negative arguments are rejected.  A zero argument is only accepted where the
    value is well defined: never for a general ``pmean`` with ``p < 0`` (the
    explicit ``harm`` kind returns 0 there).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b < 0) or np.any(np.isnan(a)) or np.any(np.isnan(b)):
        raise DomainError("mixing functions are defined on the nonnegative orthant")
    if spec.needs_positive and (np.any(a == 0) or np.any(b == 0)):
        raise DomainError(f"p-mean with p={spec.p:g} is undefined at zero")
    out = spec(a, b)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_violation: float
    samples: int


def _samples(sample_count, seed, k):
    if sample_count < 1:
        raise InvalidParam("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    return [np.exp(rng.uniform(-3, 3, sample_count) * np.log(10)) for _ in range(k)]


def check_one_homogeneity(spec: MixingSpec, sample_count: int = 1000, seed: int = 0, rtol: float = 1e-10) -> CheckResult:
    """Sample positive ``(a, b, c)`` and test ``sigma(ca, cb) == c sigma(a, b)``."""
    a, b, c = _samples(sample_count, seed, 3)
    lhs = np.asarray(spec(c * a, c * b), dtype=float)
    rhs = c * np.asarray(spec(a, b), dtype=float)
    scale = np.maximum(np.abs(rhs), np.finfo(float).tiny)
    viol = np.abs(lhs - rhs) / scale
    worst = float(np.nanmax(viol)) if np.all(np.isfinite(viol)) else np.inf
    return CheckResult("one-homogeneity", worst <= rtol, worst, sample_count)


def check_positivity(spec: MixingSpec, sample_count: int = 1000, seed: int = 0) -> CheckResult:
    a, b = _samples(sample_count, seed, 2)
    val = np.asarray(spec(a, b), dtype=float)
    # violation: how far below zero (or non-finite) the worst sample sits
    bad = ~np.isfinite(val) | (val <= 0)
    worst = float(np.max(np.where(bad, np.abs(np.nan_to_num(val, nan=1.0)) + 1.0, 0.0)))
    return CheckResult("positivity", not bad.any(), worst, sample_count)


def check_symmetry(spec: MixingSpec, sample_count: int = 1000, seed: int = 0, rtol: float = 1e-12) -> CheckResult:
    a, b = _samples(sample_count, seed, 2)
    x = np.asarray(spec(a, b), dtype=float)
    y = np.asarray(spec(b, a), dtype=float)
    viol = np.abs(x - y) / np.maximum(np.abs(x), np.finfo(float).tiny)
    worst = float(np.max(viol))
    return CheckResult("symmetry", worst <= rtol, worst, sample_count)


def check_order_preservation(spec: MixingSpec, sample_count: int = 1000, seed: int = 0, rtol: float = 1e-12) -> CheckResult:
    """Test ``sigma(a', b') >= sigma(a, b)`` whenever ``a' >= a`` and ``b' >= b``."""
    a, b, da, db = _samples(sample_count, seed, 4)
    lo = np.asarray(spec(a, b), dtype=float)
    hi = np.asarray(spec(a + da, b + db), dtype=float)
    viol = np.maximum(lo - hi, 0.0) / np.maximum(np.abs(lo), np.finfo(float).tiny)
    worst = float(np.max(viol))
    return CheckResult("order-preservation", worst <= rtol, worst, sample_count)
