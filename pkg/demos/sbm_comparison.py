"""Compare standard label spreading with NHOLS on one stochastic block model.

Three classes of 100/200/400 nodes, p_in = 0.1, p_out = p_in / rho.  Both
methods choose their hyper-parameters by 5-fold cross-validation over the
known labels and are scored on the rest.
"""
import sys

from nhols import CvConfig, Method, SolverSettings, fit_and_score, parse_method
from nhols.data import SbmSpec, enumerate_triangles, generate_sbm, sample_labeled_set

rho = float(sys.argv[1]) if len(sys.argv) > 1 else 3.0
fraction = float(sys.argv[2]) if len(sys.argv) > 2 else 0.06

G, labels = generate_sbm(SbmSpec((100, 200, 400), 0.1, 0.1 / rho, seed=1))
T = enumerate_triangles(G)
print(f"n={G.n}  edges={G.nnz // 2}  triangles={T.num_triples}")

known = sample_labeled_set(labels, fraction, seed=2).known_mask
print(f"{known.sum()} known labels ({fraction:.0%} per class)")

settings = SolverSettings(fallback=True)
for method in (Method("ls"), parse_method("nhols-arith"), parse_method("nhols-l2"), parse_method("nhols-max")):
    rec = fit_and_score(G, T, labels, known, method, cv=CvConfig(seed=3), settings=settings)
    print(f"{rec.method:12s} accuracy={rec.accuracy:.3f}  alpha={rec.alpha:.2f} beta={rec.beta:.2f}")
