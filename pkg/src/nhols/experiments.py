"""Cross-validated model selection, SBM sweeps, runtime benchmarks, manifest runs."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SbmSpec, build_knn_graph, enumerate_triangles, generate_sbm, sample_labeled_set
from .errors import ConfigError, InvalidEval, InvalidParam, NHOLSError
from .mixing import MAXIMUM, MixingSpec, parse_mixing
from .spreading import COLUMN_SCALES, label_column_scale, nhols_batch, predict, smooth_labels, standard_ls_batch
from .structures import validate_coverage

__all__ = [
    "NHOLS_ALPHAS",
    "NHOLS_BETAS",
    "LS_BETAS",
    "Grid",
    "Method",
    "parse_method",
    "CvConfig",
    "SolverSettings",
    "CvResult",
    "RunRecord",
    "accuracy",
    "make_folds",
    "grid_search_cv",
    "fit_and_score",
    "SweepReport",
    "run_sbm_sweep",
    "BenchReport",
    "benchmark_runtime",
    "load_manifest",
    "run_experiment",
]

NHOLS_ALPHAS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
NHOLS_BETAS = (0.1, 0.25, 0.40, 0.55)
LS_BETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class Grid:
    """Hyper-parameter points ``(alpha, beta)``; standard LS uses ``alpha = 0``.

    Points are kept sorted by ``alpha`` then ``beta`` so the first maximum is the
    documented tie-break.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple(sorted((round(float(a), 12), round(float(b), 12)) for a, b in self.points))
        if not pts:
            raise InvalidParam("empty grid")
        object.__setattr__(self, "points", pts)

    @classmethod
    def nhols(cls, alphas=NHOLS_ALPHAS, betas=NHOLS_BETAS) -> "Grid":
        # alpha + beta < 1 leaves gamma > 0
        return cls(tuple((a, b) for a in alphas for b in betas if a + b < 1 - 1e-12))

    @classmethod
    def ls(cls, betas=LS_BETAS) -> "Grid":
        return cls(tuple((0.0, b) for b in betas))

    def __len__(self):
        return len(self.points)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def betas(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


assert len(Grid.nhols()) == 16 and len(Grid.ls()) == 9


@dataclass(frozen=True)
class Method:
    """``ls`` (standard label spreading) or NHOLS with a mixing function."""

    name: str
    mixing: MixingSpec | None = None

    @property
    def is_ls(self) -> bool:
        return self.mixing is None

    def default_grid(self) -> Grid:
        return Grid.ls() if self.is_ls else Grid.nhols()


def parse_method(text: str) -> Method:
    """``ls`` or ``nhols-<mixing>`` (a bare mixing name is accepted too)."""
    t = text.strip().lower()
    if t in ("ls", "standard-ls", "standard_ls"):
        return Method("ls")
    if t.startswith("nhols-"):
        t = t[len("nhols-"):]
    spec = parse_mixing(t)
    return Method(f"nhols-{spec.label}", spec)


@dataclass(frozen=True)
class CvConfig:
    """``folds`` independent label-balanced splits of the known nodes.

    ``scheme="halves"`` draws a fresh 50/50 train/validation split per fold;
    ``scheme="kfold"`` partitions each class into ``folds`` disjoint parts and
    validates on one part at a time.
    """

    folds: int = 5
    seed: int = 0
    scheme: str = "halves"

    def __post_init__(self):
        if self.folds < 1:
            raise InvalidParam("folds must be >= 1")
        if self.scheme not in ("halves", "kfold"):
            raise InvalidParam(f"unknown CV scheme {self.scheme!r}")


@dataclass(frozen=True)
class SolverSettings:
    """Solver knobs shared by every grid point; ``column_scale`` applies to NHOLS only."""

    epsilon: float = 0.01
    tol: float = 1e-5
    max_iters: int = 40
    normalize_anchor: bool = False
    column_scale: str = "label-norm"
    fallback: bool = False

    def __post_init__(self):
        if self.column_scale not in COLUMN_SCALES:
            raise InvalidParam(f"column_scale must be one of {COLUMN_SCALES}")

    def scale_for(self, method: "Method", Y):
        if method.is_ls or self.column_scale == "none":
            return None
        return label_column_scale(Y)


def accuracy(pred, truth, known_mask) -> float:
    """Fraction of nodes outside ``known_mask`` whose prediction is correct."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    known_mask = np.asarray(known_mask, dtype=bool)
    if not (pred.shape == truth.shape == known_mask.shape):
        raise InvalidEval("pred, truth and known_mask must have equal lengths")
    unl = ~known_mask
    if not unl.any():
        raise InvalidEval("no unlabeled nodes to evaluate")
    return float(np.mean(pred[unl] == truth[unl]))


def make_folds(labels, known_mask, cv: CvConfig):
    """List of ``(train_mask, val_mask)`` pairs, balanced per class within one node."""
    labels = np.asarray(labels)
    known = np.flatnonzero(known_mask)
    classes = np.unique(labels[known])
    rng = np.random.default_rng(cv.seed)
    per_class = {c: known[labels[known] == c] for c in classes}
    if any(len(v) < 2 for v in per_class.values()):
        raise InvalidEval("every class needs at least 2 known nodes for cross-validation")
    n = len(labels)
    folds = []
    if cv.scheme == "halves":
        for _ in range(cv.folds):
            tr = np.zeros(n, dtype=bool)
            for c in classes:
                nodes = rng.permutation(per_class[c])
                tr[nodes[: (len(nodes) + 1) // 2]] = True
            folds.append((tr, np.asarray(known_mask, dtype=bool) & ~tr))
    else:
        parts = {c: np.array_split(rng.permutation(per_class[c]), cv.folds) for c in classes}
        for f in range(cv.folds):
            va = np.zeros(n, dtype=bool)
            for c in classes:
                va[parts[c][f]] = True
            if not va.any():
                raise InvalidEval("a validation fold is empty")
            folds.append((np.asarray(known_mask, dtype=bool) & ~va, va))
    return folds


def _one_hot(labels, mask, c):
    Y = np.zeros((len(labels), c))
    idx = np.flatnonzero(mask)
    Y[idx, labels[idx]] = 1.0
    return Y


def _spread_columns(G, T, method: Method, alphas, betas, Y, settings: SolverSettings):
    if method.is_ls:
        return standard_ls_batch(G, betas, Y, tol=settings.tol, max_iters=settings.max_iters, record=False)
    return nhols_batch(G, T, method.mixing, alphas, betas, smooth_labels(Y, settings.epsilon),
                       tol=settings.tol, max_iters=settings.max_iters, record=False,
                       normalize_anchor=settings.normalize_anchor)


@dataclass(eq=False)
class CvResult:
    grid: Grid
    table: np.ndarray  # (grid points, folds) validation accuracies
    folds: list

    @property
    def mean(self) -> np.ndarray:
        return self.table.mean(axis=1)

    @property
    def best_index(self) -> int:
        m = self.mean
        # first point within rounding of the maximum: lowest alpha, then beta
        return int(np.flatnonzero(m >= m.max() - 1e-12)[0])

    @property
    def best(self) -> tuple:
        return self.grid.points[self.best_index]


def grid_search_cv(G, T, labels, known_mask, method: Method, grid: Grid | None = None,
                   cv: CvConfig | None = None, settings: SolverSettings | None = None,
                   n_classes: int | None = None, observe=None) -> CvResult:
    """Score every grid point on every fold and keep the best mean accuracy.

    Only the training half of a fold is given to the spreader; the validation
    half is used for scoring alone.  All (fold, point, class) columns are
    advanced together.  ``observe(fold, train_mask, val_mask, Y)`` is called
    with the exact label block handed to the spreader for each fold.
    """
    grid = grid or method.default_grid()
    cv = cv or CvConfig()
    settings = settings or SolverSettings()
    labels = np.asarray(labels, dtype=np.int64)
    c = n_classes or int(labels[np.asarray(known_mask, bool)].max()) + 1
    folds = make_folds(labels, known_mask, cv)
    P = len(grid)
    blocks, al, be = [], [], []
    for f, (tr, va) in enumerate(folds):
        Y = _one_hot(labels, tr, c)
        if observe is not None:
            observe(f, tr, va, Y.copy())
        for a, b in grid.points:
            blocks.append(Y)
            al.append(np.full(c, a))
            be.append(np.full(c, b))
    res = _spread_columns(G, T, method, np.concatenate(al), np.concatenate(be), np.hstack(blocks), settings)
    F = res.F.reshape(len(labels), len(folds), P, c)
    table = np.empty((P, len(folds)))
    for f, (tr, va) in enumerate(folds):
        scale = settings.scale_for(method, _one_hot(labels, tr, c))
        for p in range(P):
            pred = predict(F[:, f, p, :], scale)
            table[p, f] = np.mean(pred[va] == labels[va])
    return CvResult(grid=grid, table=table, folds=folds)


@dataclass(eq=False)
class RunRecord:
    method: str
    accuracy: float
    alpha: float
    beta: float
    iterations: list
    cv_mean: float | None
    seconds: float
    predictions: np.ndarray = field(repr=False, default=None)
    result: object = field(repr=False, default=None)

    def metrics(self) -> dict:
        return {"method": self.method, "accuracy": self.accuracy, "alpha": self.alpha, "beta": self.beta,
                "iterations": [int(i) for i in self.iterations], "cv_mean": self.cv_mean}


def fit_and_score(G, T, labels, known_mask, method: Method, grid: Grid | None = None,
                  cv: CvConfig | None = None, settings: SolverSettings | None = None,
                  n_classes: int | None = None, record: bool = False) -> RunRecord:
    """Choose hyper-parameters by CV (skipped for a one-point grid), spread all known labels, score."""
    settings = settings or SolverSettings()
    grid = grid or method.default_grid()
    labels = np.asarray(labels, dtype=np.int64)
    known_mask = np.asarray(known_mask, dtype=bool)
    c = n_classes or int(labels.max()) + 1
    t0 = time.perf_counter()
    cv_mean = None
    if len(grid) == 1:
        a, b = grid.points[0]
    else:
        cvr = grid_search_cv(G, T, labels, known_mask, method, grid, cv, settings, n_classes=c)
        a, b = cvr.best
        cv_mean = float(cvr.mean[cvr.best_index])
    Y = _one_hot(labels, known_mask, c)
    if method.is_ls:
        res = standard_ls_batch(G, b, Y, tol=settings.tol, max_iters=settings.max_iters, record=record)
    else:
        res = nhols_batch(G, T, method.mixing, a, b, smooth_labels(Y, settings.epsilon), tol=settings.tol,
                          max_iters=settings.max_iters, record=record,
                          normalize_anchor=settings.normalize_anchor)
    pred = predict(res.F, settings.scale_for(method, Y))
    res.predictions = pred
    return RunRecord(method=method.name, accuracy=accuracy(pred, labels, known_mask), alpha=float(a),
                     beta=float(b), iterations=res.iterations.tolist(), cv_mean=cv_mean,
                     seconds=time.perf_counter() - t0, predictions=pred, result=res)


def _subseed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass(eq=False)
class SweepReport:
    rhos: tuple
    fractions: tuple
    methods: tuple
    records: list  # dicts, one per (rho, fraction, repeat, method)

    def mean_accuracy(self, rho, fraction, method) -> float:
        vals = [r["accuracy"] for r in self.records
                if r["rho"] == rho and r["fraction"] == fraction and r["method"] == method and r["error"] is None]
        return float(np.mean(vals)) if vals else float("nan")

    def table(self, method) -> np.ndarray:
        """``(len(rhos), len(fractions))`` mean accuracies."""
        return np.array([[self.mean_accuracy(r, f, method) for f in self.fractions] for r in self.rhos])

    def to_dict(self) -> dict:
        return {"rhos": list(self.rhos), "fractions": list(self.fractions), "methods": list(self.methods),
                "mean_accuracy": {m: self.table(m).tolist() for m in self.methods},
                "records": self.records}


def run_sbm_sweep(rhos=(2, 2.5, 3, 3.5, 4), fractions=(0.06, 0.09, 0.12, 0.15, 0.18, 0.21), repeats: int = 10,
                  methods=("ls", "nhols-max"), seed: int = 0, sizes=(100, 200, 400), p_in: float = 0.1,
                  cv: CvConfig | None = None, settings: SolverSettings | None = None,
                  cell_methods=None, progress=None) -> SweepReport:
    """Average accuracy over SBM samples for every ``(rho, fraction)`` cell.

    One graph is drawn per ``(rho, repeat)`` and shared by all fractions; each
    fraction draws its own labeled set.  ``cell_methods`` optionally maps a
    fraction to the methods run in that column (defaults to ``methods``).
    Failures are recorded in the ``error`` field and the sweep continues.
    """
    settings = settings or SolverSettings(fallback=True)
    meths = [parse_method(m) if isinstance(m, str) else m for m in methods]
    names = tuple(m.name for m in meths)
    records = []
    for ri, rho in enumerate(rhos):
        for rep in range(repeats):
            try:
                G, labels = generate_sbm(SbmSpec(sizes, p_in, p_in / rho, seed=_subseed(seed, ri, rep)))
                T = enumerate_triangles(G)
                validate_coverage(G, T, fallback=settings.fallback)
                graph_err = None
            except NHOLSError as exc:
                graph_err = f"{type(exc).__name__}: {exc}"
            for fi, frac in enumerate(fractions):
                wanted = meths
                if cell_methods is not None and frac in cell_methods:
                    wanted = [parse_method(m) if isinstance(m, str) else m for m in cell_methods[frac]]
                for mi, m in enumerate(wanted):
                    rec = {"rho": rho, "fraction": frac, "repeat": rep, "method": m.name, "accuracy": None,
                           "alpha": None, "beta": None, "error": graph_err}
                    if graph_err is None:
                        try:
                            ls = sample_labeled_set(labels, frac, seed=_subseed(seed, ri, rep, fi, 1))
                            cvc = CvConfig(folds=(cv.folds if cv else 5), scheme=(cv.scheme if cv else "halves"),
                                           seed=_subseed(seed, ri, rep, fi, 2))
                            rr = fit_and_score(G, T, labels, ls.known_mask, m, cv=cvc, settings=settings)
                            rec.update(accuracy=rr.accuracy, alpha=rr.alpha, beta=rr.beta)
                        except NHOLSError as exc:
                            rec["error"] = f"{type(exc).__name__}: {exc}"
                    records.append(rec)
                    if progress:
                        progress(rec)
    return SweepReport(tuple(rhos), tuple(fractions), names, records)


@dataclass(eq=False)
class BenchReport:
    rows: list
    slope: float | None
    intercept: float | None
    r2: float | None
    params: dict

    def to_dict(self):
        return {"rows": self.rows, "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "params": self.params}


def _linear_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.ptp(x) == 0:
        return None, None, None
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sst = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / sst if sst > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _best_time(fn, repeats, warmup):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    # the fastest run is the least disturbed by other load on the machine
    return float(np.min(times))


def benchmark_runtime(sizes, seed: int = 0, mixing: MixingSpec = MAXIMUM, repeats: int = 5, warmup: int = 1,
                      fraction: float = 0.1, settings: SolverSettings | None = None) -> BenchReport:
    """Best-of-``repeats`` wall time of one full NHOLS solve and one standard LS solve per size.

    Graphs are 3-class SBMs with equal classes, ``p_in = log(n)^2 / n`` and
    ``p_out = p_in / 3``.  One ``(alpha, beta)`` pair is drawn at random from the
    NHOLS grid (and one ``beta`` from the LS grid) and used at every size.  Time
    is regressed on ``nnz(A) + 3 * #triples``.
    """
    sizes = [int(s) for s in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidParam("sizes must be increasing")
    settings = settings or SolverSettings(fallback=True)
    rng = np.random.default_rng(seed)
    a, b = Grid.nhols().points[rng.integers(16)]
    b_ls = Grid.ls().points[rng.integers(9)][1]
    rows = []
    for k, n in enumerate(sizes):
        p_in = min(1.0, np.log(n) ** 2 / n)
        third = n // 3
        G, labels = generate_sbm(SbmSpec((third, third, n - 2 * third), p_in, p_in / 3, seed=_subseed(seed, k)))
        T = enumerate_triangles(G)
        ls = sample_labeled_set(labels, fraction, seed=_subseed(seed, k, 1))
        Y = _one_hot(labels, ls.known_mask, 3)
        Ye = smooth_labels(Y, settings.epsilon)
        iters = []

        def run_nhols():
            r = nhols_batch(G, T, mixing, a, b, Ye, tol=settings.tol, max_iters=settings.max_iters, record=False,
                            normalize_anchor=settings.normalize_anchor)
            iters.append(int(r.iterations.max()))

        def run_ls():
            standard_ls_batch(G, b_ls, Y, tol=settings.tol, max_iters=settings.max_iters, record=False)

        t_n = _best_time(run_nhols, repeats, warmup)
        t_l = _best_time(run_ls, repeats, warmup)
        rows.append({"n": n, "nnz": G.nnz, "triples": T.num_triples, "work": G.nnz + 3 * T.num_triples,
                     "nhols_seconds": t_n, "ls_seconds": t_l, "ratio": t_n / t_l if t_l > 0 else float("inf"),
                     "iterations": iters[-1]})
    slope, intercept, r2 = _linear_fit([r["work"] for r in rows], [r["nhols_seconds"] for r in rows])
    return BenchReport(rows, slope, intercept, r2,
                       {"alpha": a, "beta": b, "ls_beta": b_ls, "mixing": mixing.label, "seed": seed})


_MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["dataset", "fractions"],
    "properties": {
        "dataset": {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "points": {"type": "string"},
                "edges": {"type": "string"},
                "triangles": {"type": "string"},
                "labels": {"type": "string"},
                "node_map": {"type": "string"},
            },
            "anyOf": [{"required": ["points"]}, {"required": ["edges", "labels"]}],
        },
        "k": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "fractions": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                      "minItems": 1},
        "repeats": {"type": "integer", "minimum": 1},
        "methods": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "grids": {
            "type": "object",
            "properties": {
                "nhols": {"type": "object", "properties": {"alpha": {"type": "array"}, "beta": {"type": "array"}}},
                "ls": {"type": "object", "properties": {"beta": {"type": "array"}}},
            },
        },
        "cv": {"type": "object", "properties": {"folds": {"type": "integer", "minimum": 1},
                                                 "scheme": {"enum": ["halves", "kfold"]}}},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "tol": {"type": "number", "minimum": 0},
        "max_iters": {"type": "integer", "minimum": 1},
        "normalize_anchor": {"type": "boolean"},
        "column_scale": {"enum": ["label-norm", "none"]},
        "fallback_dangling": {"type": "boolean"},
        "mutual_knn": {"type": "boolean"},
        "output_dir": {"type": "string"},
    },
}


def load_manifest(source) -> tuple[dict, Path]:
    """Parse and validate a manifest (path or dict); returns it with its base directory."""
    import jsonschema

    if isinstance(source, dict):
        manifest, base = dict(source), Path.cwd()
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"manifest not found: {path}")
        try:
            manifest = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        base = path.parent
    try:
        jsonschema.validate(manifest, _MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"manifest {where}: {exc.message}") from None
    for key in ("points", "edges", "triangles", "labels", "node_map"):
        if key in manifest["dataset"]:
            p = Path(manifest["dataset"][key])
            p = p if p.is_absolute() else base / p
            if not p.exists():
                raise ConfigError(f"dataset.{key}: file not found: {p}")
            manifest["dataset"][key] = str(p)
    return manifest, base


def _load_dataset(ds: dict, k: int, fallback: bool, mutual: bool):
    from . import io

    if "points" in ds:
        P = io.read_point_csv(ds["points"])
        if P.labels is None and "labels" not in ds:
            raise ConfigError("point CSV has no label column and no labels file was given")
        index = io.NodeIndex(P.ids)
        G = build_knn_graph(P, k, mutual=mutual)
        labels = P.labels if P.labels is not None else io.read_label_csv(ds["labels"], index)
    else:
        index = io.read_node_map(ds["node_map"]) if "node_map" in ds else None
        G, index = io.read_edge_tsv(ds["edges"], index, fallback=fallback)
        labels = io.read_label_csv(ds["labels"], index)
    if np.any(labels < 0):
        raise ConfigError("every node needs a ground-truth label for evaluation")
    T = io.read_triangle_tsv(ds["triangles"], index) if "triangles" in ds else enumerate_triangles(G)
    return G, T, labels, index


@dataclass(eq=False)
class ExperimentReport:
    metrics: dict
    timings: dict
    output_dir: Path | None


def run_experiment(manifest, output_dir=None) -> ExperimentReport:
    """Manifest-driven pipeline: ingest, build graph and tensor, CV, spread, score.

    Writes ``metrics.json`` (deterministic for a fixed manifest),
    ``timings.json``, and per-run ``predictions/*.csv`` and ``diagnostics/*.csv``
    under the output directory.
    """
    from . import io

    m, base = load_manifest(manifest)
    stage = "ingest"
    try:
        settings = SolverSettings(epsilon=m.get("epsilon", 0.01), tol=m.get("tol", 1e-5),
                                  max_iters=m.get("max_iters", 40),
                                  normalize_anchor=m.get("normalize_anchor", False),
                                  column_scale=m.get("column_scale", "label-norm"),
                                  fallback=m.get("fallback_dangling", False))
        t0 = time.perf_counter()
        G, T, labels, index = _load_dataset(m["dataset"], m.get("k", 7), settings.fallback, m.get("mutual_knn", False))
        t_build = time.perf_counter() - t0
        stage = "coverage"
        cov = validate_coverage(G, T, fallback=settings.fallback)
        methods = [parse_method(x) for x in m.get("methods", ["nhols-l2", "ls"])]
        grids = m.get("grids", {})
        g_n = grids.get("nhols", {})
        g_l = grids.get("ls", {})
        nh_grid = Grid.nhols(g_n.get("alpha", NHOLS_ALPHAS), g_n.get("beta", NHOLS_BETAS))
        ls_grid = Grid.ls(g_l.get("beta", LS_BETAS))
        seed = m.get("seed", 0)
        repeats = m.get("repeats", 5)
        cvm = m.get("cv", {})
        c = int(labels.max()) + 1

        out = output_dir or m.get("output_dir")
        out = Path(out) if out is not None else None
        if out is not None and not out.is_absolute() and output_dir is None:
            out = base / out
        if out is not None:
            (out / "predictions").mkdir(parents=True, exist_ok=True)
            (out / "diagnostics").mkdir(parents=True, exist_ok=True)

        stage = "spread"
        runs, timing_rows = [], []
        for fi, frac in enumerate(m["fractions"]):
            for rep in range(repeats):
                ls = sample_labeled_set(labels, frac, seed=_subseed(seed, fi, rep))
                cvc = CvConfig(folds=cvm.get("folds", 5), scheme=cvm.get("scheme", "halves"),
                               seed=_subseed(seed, fi, rep, 7))
                for meth in methods:
                    rr = fit_and_score(G, T, labels, ls.known_mask, meth, grid=ls_grid if meth.is_ls else nh_grid,
                                       cv=cvc, settings=settings, n_classes=c, record=True)
                    row = dict(rr.metrics(), fraction=frac, repeat=rep, labeled=int(ls.known_mask.sum()))
                    runs.append(row)
                    timing_rows.append({"method": rr.method, "fraction": frac, "repeat": rep, "seconds": rr.seconds})
                    if out is not None:
                        tag = f"{rr.method.replace(':', '_')}_f{frac:g}_r{rep}"
                        io.write_predictions(rr.predictions, out / "predictions" / f"{tag}.csv", index)
                        io.write_diagnostics(rr.result, out / "diagnostics" / f"{tag}.csv")
    except NHOLSError as exc:
        raise type(exc)(f"[{stage}] {exc}") if not isinstance(exc, (ConfigError,)) else exc

    summary = {}
    for meth in methods:
        for frac in m["fractions"]:
            accs = [r["accuracy"] for r in runs if r["method"] == meth.name and r["fraction"] == frac]
            summary.setdefault(meth.name, {})[f"{frac:g}"] = {"mean": float(np.mean(accs)),
                                                              "std": float(np.std(accs)), "runs": len(accs)}
    metrics = {
        "dataset": m["dataset"].get("name", Path(m["dataset"].get("points", m["dataset"].get("edges", ""))).stem),
        "n": G.n, "edges": G.nnz // 2, "triples": T.num_triples,
        "dangling_nodes": len(cov.zero_hyper_degree), "k": m.get("k", 7), "seed": seed,
        "settings": {"epsilon": settings.epsilon, "tol": settings.tol, "max_iters": settings.max_iters,
                     "normalize_anchor": settings.normalize_anchor, "column_scale": settings.column_scale,
                     "fallback_dangling": settings.fallback},
        "summary": summary, "runs": runs,
    }
    timings = {"build_seconds": t_build, "runs": timing_rows}
    if out is not None:
        io.write_json(metrics, out / "metrics.json")
        io.write_json(timings, out / "timings.json")
    return ExperimentReport(metrics, timings, out)
