"""Compiled triple-scatter and pair-sum kernels.

The numpy versions in :mod:`nhols.spreading` are the reference; these fuse the
gather, mixing and scatter into one pass over the triples.  Accumulation runs in
triple order on a single thread, so repeated calls are bit-identical.
Set ``NHOLS_DISABLE_NUMBA=1`` to force the numpy path.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENABLED = numba is not None and os.environ.get("NHOLS_DISABLE_NUMBA", "") not in ("1", "true", "yes")

KIND_CODES = {"arith": 0, "harm": 1, "l2": 2, "geom": 3, "max": 4}


def kind_code(spec):
    """``(code, p)`` for a mixing spec, or ``None`` when it has no compiled form."""
    if spec.kind in KIND_CODES:
        return KIND_CODES[spec.kind], 0.0
    if spec.kind == "pmean":
        p = spec.p
        if p == 1.0:
            return 0, 0.0
        if abs(p) < 1e-8:
            return 3, 0.0
        if math.isinf(p):
            return (4, 0.0) if p > 0 else (6, 0.0)
        return 5, float(p)
    return None


if numba is not None:
    _LOG2 = math.log(2.0)

    @numba.njit(cache=True, inline="always")
    def _sigma(code, p, a, b):
        if code == 0:
            return a + b
        if code == 1:
            s = a + b
            return 4.0 * a * b / s if s > 0.0 else 0.0
        if code == 2:
            return math.sqrt(2.0 * (a * a + b * b))
        if code == 3:
            return 2.0 * math.sqrt(a * b)
        if code == 4:
            return 2.0 * (a if a > b else b)
        if code == 6:
            return 2.0 * (a if a < b else b)
        if a == 0.0 or b == 0.0:
            x = a + b
            if x == 0.0:
                return 0.0
            return 2.0 * math.exp((p * math.log(x) - _LOG2) / p)
        pa = p * math.log(a)
        pb = p * math.log(b)
        m = pa if pa > pb else pb
        lse = m + math.log(math.exp(pa - m) + math.exp(pb - m))
        return 2.0 * math.exp((lse - _LOG2) / p)

    @numba.njit(cache=True)
    def contract(triples, tau, inv_sqrt, F, code, p):
        n, C = F.shape
        X = np.empty((n, C))
        for i in range(n):
            for c in range(C):
                X[i, c] = F[i, c] * inv_sqrt[i]
        out = np.zeros((n, C))
        for t in range(triples.shape[0]):
            i = triples[t, 0]
            j = triples[t, 1]
            k = triples[t, 2]
            w = 2.0 * tau[t]
            for c in range(C):
                xi = X[i, c]
                xj = X[j, c]
                xk = X[k, c]
                out[i, c] += w * _sigma(code, p, xj, xk)
                out[j, c] += w * _sigma(code, p, xi, xk)
                out[k, c] += w * _sigma(code, p, xi, xj)
        for i in range(n):
            for c in range(C):
                out[i, c] *= inv_sqrt[i]
        return out

    @numba.njit(cache=True)
    def pair_sum(rows, cols, weights, inv_sqrt, F, code, p):
        C = F.shape[1]
        acc = np.zeros(C)
        for e in range(rows.shape[0]):
            r = rows[e]
            q = cols[e]
            w = weights[e]
            for c in range(C):
                s = _sigma(code, p, F[r, c] * inv_sqrt[r], F[q, c] * inv_sqrt[q])
                acc[c] += w * s * s
        return acc
