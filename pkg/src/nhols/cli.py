"""Command-line entry point (``nhols``)."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .data import SbmSpec, build_knn_graph, enumerate_triangles, generate_sbm, sample_labeled_set
from .errors import IsolatedNode, NHOLSError
from .experiments import CvConfig, SolverSettings, benchmark_runtime, grid_search_cv, parse_method
from .experiments import run_experiment, run_sbm_sweep
from .mixing import parse_mixing
from .spreading import COLUMN_SCALES, nhols_batch, predict, smooth_labels, standard_ls_batch
from .structures import validate_coverage


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _solver_flags(p, with_weights=True):
    p.add_argument("--mixing", default="max", help="arith, harm, l2, geom, max or pmean:<p>")
    if with_weights:
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.01, help="label smoothing (default 0.01)")
    p.add_argument("--tol", type=float, default=1e-5, help="relative-change tolerance (default 1e-5)")
    p.add_argument("--max-iters", type=int, default=40, help="iteration cap (default 40)")
    p.add_argument("--fallback-dangling", action="store_true",
                   help="give nodes without edges or triangles a unit self-loop instead of failing")
    p.add_argument("--normalize-anchor", action="store_true", help="rescale each label column to phi = 1")
    p.add_argument("--column-scale", choices=COLUMN_SCALES, default="label-norm",
                   help="prediction rule for NHOLS columns (default label-norm)")


def _graph_inputs(p):
    p.add_argument("--edges", required=True, help="edge TSV")
    p.add_argument("--triangles", help="triangle TSV (enumerated from the graph when omitted)")
    p.add_argument("--node-map", help="CSV external_id,internal_id")


def _settings(args):
    return SolverSettings(epsilon=args.eps, tol=args.tol, max_iters=args.max_iters,
                          normalize_anchor=args.normalize_anchor, column_scale=args.column_scale,
                          fallback=args.fallback_dangling)


def _load_graph(args):
    index = io.read_node_map(args.node_map) if args.node_map else None
    G, index = io.read_edge_tsv(args.edges, index, fallback=args.fallback_dangling)
    T = io.read_triangle_tsv(args.triangles, index) if args.triangles else enumerate_triangles(G)
    return G, T, index


def _resolve_weights(args, method):
    """``(alpha, beta)`` from the flags; gamma defaults to the remainder."""
    a = 0.0 if method.is_ls else args.alpha
    b = args.beta
    if b is None:
        raise NHOLSError("--beta is required")
    if a is None:
        if args.gamma is None:
            raise NHOLSError("give --alpha, or --gamma to derive it")
        a = 1.0 - b - args.gamma
    if args.gamma is not None and abs(a + b + args.gamma - 1.0) > 1e-12:
        raise NHOLSError("alpha + beta + gamma must equal 1")
    return a, b


def cmd_generate_sbm(args):
    sizes = _ints(args.sizes)
    p_out = args.p_out if args.p_out is not None else args.p_in / args.rho
    G, labels = generate_sbm(SbmSpec(sizes, args.p_in, p_out, seed=args.seed))
    io.write_edge_tsv(G, args.out_edges)
    io.write_label_csv(labels, args.out_labels)
    if args.known_fraction:
        ls = sample_labeled_set(labels, args.known_fraction, seed=args.seed + 1)
        io.write_label_csv(labels, args.out_known, mask=ls.known_mask)
    print(f"n={G.n} edges={G.nnz // 2}")


def cmd_build_knn(args):
    P = io.read_point_csv(args.points)
    G = build_knn_graph(P, args.k, mutual=args.mutual)
    index = io.NodeIndex(P.ids)
    io.write_edge_tsv(G, args.out_edges, index)
    if P.labels is not None and args.out_labels:
        io.write_label_csv(P.labels, args.out_labels, index)
    print(f"n={G.n} edges={G.nnz // 2}")


def cmd_triangles(args):
    index = io.read_node_map(args.node_map) if args.node_map else None
    G, index = io.read_edge_tsv(args.edges, index)
    T = enumerate_triangles(G, weighting=args.weighting)
    io.write_triangle_tsv(T, args.out, index)
    print(f"triangles={T.num_triples}")


def cmd_spread(args):
    method = parse_method("ls" if args.method == "ls" else args.mixing)
    G, T, index = _load_graph(args)
    known = io.read_label_csv(args.labels, index)
    mask = known >= 0
    if not mask.any():
        raise NHOLSError("the label file marks no known nodes")
    c = int(known.max()) + 1
    Y = np.zeros((G.n, c))
    Y[np.flatnonzero(mask), known[mask]] = 1.0
    a, b = _resolve_weights(args, method)
    settings = _settings(args)
    if method.is_ls:
        res = standard_ls_batch(G, b, Y, tol=args.tol, max_iters=args.max_iters)
    else:
        cov = validate_coverage(G, T, fallback=args.fallback_dangling)
        if cov.zero_hyper_degree:
            print(f"warning: {len(cov.zero_hyper_degree)} node(s) in no triangle use the unit fallback",
                  file=sys.stderr)
        res = nhols_batch(G, T, method.mixing, a, b, smooth_labels(Y, args.eps), tol=args.tol,
                          max_iters=args.max_iters, normalize_anchor=args.normalize_anchor)
    pred = predict(res.F, settings.scale_for(method, Y))
    io.write_predictions(pred, args.out, index)
    if args.diagnostics:
        io.write_diagnostics(res, args.diagnostics)
    metrics = {"method": method.name, "alpha": a, "beta": b, "gamma": 1.0 - a - b,
               "iterations": res.iterations.tolist(), "converged": res.converged.tolist()}
    if args.truth:
        from .experiments import accuracy

        truth = io.read_label_csv(args.truth, index)
        metrics["accuracy"] = accuracy(pred, truth, mask | (truth < 0))
    if args.metrics:
        io.write_json(metrics, args.metrics)
    print(json.dumps(metrics, sort_keys=True))


def cmd_cv(args):
    method = parse_method("ls" if args.method == "ls" else args.mixing)
    G, T, index = _load_graph(args)
    known = io.read_label_csv(args.labels, index)
    mask = known >= 0
    labels = np.where(mask, known, 0)
    settings = _settings(args)
    if not method.is_ls:
        validate_coverage(G, T, fallback=args.fallback_dangling)
    cvr = grid_search_cv(G, T, labels, mask, method, cv=CvConfig(args.folds, args.seed, args.scheme),
                         settings=settings, n_classes=int(known.max()) + 1)
    a, b = cvr.best
    out = {"method": method.name, "best": {"alpha": a, "beta": b}, "seed": args.seed, "folds": args.folds,
           "table": [{"alpha": p[0], "beta": p[1], "mean": float(m), "folds": row.tolist()}
                     for p, m, row in zip(cvr.grid.points, cvr.mean, cvr.table)]}
    if args.out:
        io.write_json(out, args.out)
    print(json.dumps(out["best"], sort_keys=True))


def cmd_sbm_sweep(args):
    def progress(rec):
        if args.verbose:
            print(json.dumps(rec, sort_keys=True), file=sys.stderr)

    rep = run_sbm_sweep(rhos=_floats(args.rhos), fractions=_floats(args.fractions), repeats=args.repeats,
                        methods=args.methods.split(","), seed=args.seed,
                        cv=CvConfig(args.folds, args.seed), settings=_settings(args), progress=progress)
    io.write_json(rep.to_dict(), args.out)
    for m in rep.methods:
        print(m)
        print(np.array2string(rep.table(m), precision=3))


def cmd_bench(args):
    rep = benchmark_runtime(_ints(args.sizes), seed=args.seed, mixing=parse_mixing(args.mixing),
                            repeats=args.repeats, settings=_settings(args))
    io.write_json(rep.to_dict(), args.out)
    for r in rep.rows:
        print(f"n={r['n']} work={r['work']} nhols={r['nhols_seconds']:.4f}s ls={r['ls_seconds']:.4f}s")
    if rep.r2 is not None:
        print(f"R^2={rep.r2:.4f}")


def cmd_validate(args):
    from .validation import run_validation

    report = run_validation(seed=args.seed, quick=args.quick)
    if args.out:
        io.write_json(report, args.out)
    for c in report["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"{mark} {c['name']}: {c['value']:.3g} (tolerance {c['tolerance']:g})")
    return 0 if report["passed"] else 1


def cmd_experiment(args):
    rep = run_experiment(args.manifest, output_dir=args.out_dir)
    print(json.dumps(rep.metrics["summary"], sort_keys=True, indent=2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nhols", description="Graph and triangle label spreading tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-sbm", help="sample a stochastic block model graph")
    p.add_argument("--sizes", default="100,200,400")
    p.add_argument("--p-in", type=float, default=0.1)
    p.add_argument("--p-out", type=float, default=None)
    p.add_argument("--rho", type=float, default=4.0, help="p_in / p_out when --p-out is not given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--known-fraction", type=float, default=None, help="also write a sampled known-label file")
    p.add_argument("--out-edges", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--out-known", default="known.csv")
    p.set_defaults(func=cmd_generate_sbm)

    p = sub.add_parser("build-knn", help="k-nearest-neighbour graph from a point CSV")
    p.add_argument("--points", required=True)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--mutual", action="store_true")
    p.add_argument("--out-edges", required=True)
    p.add_argument("--out-labels")
    p.set_defaults(func=cmd_build_knn)

    p = sub.add_parser("triangles", help="list the triangles of an edge TSV")
    p.add_argument("--edges", required=True)
    p.add_argument("--node-map")
    p.add_argument("--weighting", choices=("unit", "product", "min", "mean"), default="unit")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_triangles)

    p = sub.add_parser("spread", help="spread known labels and write predictions")
    _graph_inputs(p)
    p.add_argument("--labels", required=True, help="CSV id,label of the known nodes")
    p.add_argument("--method", choices=("nhols", "ls"), default="nhols")
    _solver_flags(p)
    p.add_argument("--truth", help="full label CSV; adds accuracy on the unknown nodes")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.add_argument("--diagnostics", help="per-iteration CSV")
    p.add_argument("--metrics", help="metrics JSON")
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("cv", help="cross-validated grid search over the known labels")
    _graph_inputs(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--method", choices=("nhols", "ls"), default="nhols")
    _solver_flags(p, with_weights=False)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--scheme", choices=("halves", "kfold"), default="halves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("sbm-sweep", help="accuracy over SBM densities and label fractions")
    p.add_argument("--rhos", default="2,2.5,3,3.5,4")
    p.add_argument("--fractions", default="0.06,0.09,0.12,0.15,0.18,0.21")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--methods", default="ls,nhols-max")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verbose", action="store_true")
    _solver_flags(p, with_weights=False)
    p.set_defaults(fallback_dangling=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sbm_sweep)

    p = sub.add_parser("bench", help="runtime scaling on growing SBM graphs")
    p.add_argument("--sizes", default="4000,8000,16000,32000,64000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=7)
    _solver_flags(p, with_weights=False)
    p.set_defaults(fallback_dangling=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="numerical checks of convergence and optimality")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("experiment", help="run a JSON experiment manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except IsolatedNode as exc:
        print(f"error: {exc} (pass --fallback-dangling to give such nodes a unit self-loop)", file=sys.stderr)
        return 2
    except (NHOLSError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
