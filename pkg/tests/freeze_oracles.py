"""Regenerate ``tests/data/oracle_values.json`` from the dense oracle.

Run from the repository root: ``python tests/freeze_oracles.py``.  The tests
compare the package against the stored numbers, so a change in the oracle (or
in this script) shows up as a diff of the JSON file.
"""
import json
from itertools import product
from pathlib import Path

import numpy as np

import oracles

KINDS = ["arith", "harm", "l2", "geom", "max"]
OUT = Path(__file__).parent / "data" / "oracle_values.json"


def tensor_case(triples, n, f):
    A3 = oracles.dense_tensor(triples, n)
    f = np.asarray(f, dtype=float)
    return {
        "triples": [list(map(float, t)) for t in triples],
        "n": n,
        "f": f.tolist(),
        "delta": oracles.hyper_degrees(A3).tolist(),
        "B": oracles.pair_matrix(A3).tolist(),
        "S": {k: oracles.hyper_operator(A3, k, f).tolist() for k in KINDS},
        "phi": {k: float(oracles.phi(A3, k, f)) for k in KINDS},
        "E2": {k: oracles.energy_e2(A3, k, f) for k in KINDS},
        "theta_clique": oracles.clique_expansion(A3).tolist(),
    }


def random_case(seed, n, m):
    rng = np.random.default_rng(seed)
    tri = set()
    while len(tri) < m:
        tri.add(tuple(sorted(rng.choice(n, 3, replace=False).tolist())))
    tri = sorted(tri)
    covered = {i for t in tri for i in t}
    assert covered == set(range(n))
    tau = rng.uniform(0.5, 2.0, len(tri))
    f = rng.uniform(0.2, 3.0, n)
    case = tensor_case([(*t, w) for t, w in zip(tri, tau)], n, f)
    edges = [(a, b, float(rng.uniform(0.5, 2.0))) for a, b in {(t[0], t[1]) for t in tri} | {(t[1], t[2]) for t in tri}]
    edges.sort()
    A = oracles.dense_adjacency(edges, n)
    case["edges"] = [list(map(float, e)) for e in edges]
    case["E1"] = oracles.energy_e1(A, f)
    case["Sf"] = (oracles.normalized_adjacency(A) @ f).tolist()
    return case


def main():
    r2 = np.sqrt(2.0)
    sizes = (100, 200, 400)
    pairs_in = sum(s * (s - 1) // 2 for s in sizes)
    pairs_out = sum(a * b for i, a in enumerate(sizes) for b in sizes[i + 1:])
    grid = [(a, b) for a, b in product((0.3, 0.4, 0.5, 0.6, 0.7, 0.8), (0.1, 0.25, 0.40, 0.55))
            if a + b < 1 - 1e-12]
    data = {
        "single_triangle": tensor_case([(0, 1, 2, 1.0)], 3, [r2, r2, r2]),
        "shared_edge": tensor_case([(0, 1, 2, 1.0), (0, 1, 3, 1.0)], 4, [1.0, 2.0, 0.5, 1.5]),
        "weighted_pair": tensor_case([(0, 1, 2, 1.0), (0, 1, 3, 2.0)], 4, [1.0, 1.0, 1.0, 1.0]),
        "random_8": random_case(7, 8, 9),
        "random_12": random_case(11, 12, 20),
        "sbm_rho4": {"sizes": list(sizes), "p_in": 0.1, "p_out": 0.025,
                     "intra_pairs": pairs_in, "inter_pairs": pairs_out,
                     "intra_mean": 0.1 * pairs_in, "intra_var": 0.1 * 0.9 * pairs_in,
                     "inter_mean": 0.025 * pairs_out, "inter_var": 0.025 * 0.975 * pairs_out},
        "grid": {"nhols_points": len(grid), "ls_points": 9},
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
