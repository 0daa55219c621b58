"""With arithmetic mixing the triangle operator is a weighted clique expansion.

Build a small random tensor, apply the mixing operator to a vector, and
compare against the explicit matrix.  A nonlinear mixing (max) is shown for
contrast: it no longer matches any fixed matrix.
"""
import numpy as np

from nhols import ARITHMETIC, MAXIMUM, apply_hyper_operator
from nhols.objective import clique_expansion_matrix
from nhols.validation import random_instance

rng = np.random.default_rng(4)
inst = random_instance(rng, n=30)
Theta = clique_expansion_matrix(inst.T)

f = rng.uniform(0.1, 2.0, 30)
lin = apply_hyper_operator(inst.T, ARITHMETIC, f)
print("arith vs clique matrix:", np.max(np.abs(lin - Theta @ f)))

# the max operator is one-homogeneous but not additive
g = rng.uniform(0.1, 2.0, 30)
nonadd = apply_hyper_operator(inst.T, MAXIMUM, f + g) - apply_hyper_operator(inst.T, MAXIMUM, f) \
    - apply_hyper_operator(inst.T, MAXIMUM, g)
print("max: S(f+g) - S(f) - S(g), largest entry:", np.max(np.abs(nonadd)))
print("max: S(3f) / S(f):", np.unique(np.round(apply_hyper_operator(inst.T, MAXIMUM, 3 * f)
                                                / apply_hyper_operator(inst.T, MAXIMUM, f), 12)))
