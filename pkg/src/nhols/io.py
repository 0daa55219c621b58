"""Text formats: edge/triangle TSV, node-id map, point and label CSV, outputs.

External node ids are arbitrary strings.  When every id in a file is an integer
the internal order is numeric (so files written with internal ids read back
unchanged); otherwise ids are numbered in order of first appearance.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import PointCloud
from .errors import ParseError, ShapeError
from .structures import SparseGraph, TriangleTensor, build_graph, build_triangle_tensor

__all__ = [
    "NodeIndex",
    "read_edge_tsv",
    "write_edge_tsv",
    "read_triangle_tsv",
    "write_triangle_tsv",
    "read_node_map",
    "write_node_map",
    "read_point_csv",
    "write_point_csv",
    "read_label_csv",
    "write_label_csv",
    "write_predictions",
    "write_diagnostics",
    "write_json",
]


@dataclass
class NodeIndex:
    """Bidirectional map between external ids (strings) and dense internal ids."""

    external: list = field(default_factory=list)

    def __post_init__(self):
        self.external = [str(x) for x in self.external]
        self._lookup = {e: i for i, e in enumerate(self.external)}
        if len(self._lookup) != len(self.external):
            raise ParseError("duplicate external id in node map")

    @classmethod
    def identity(cls, n: int) -> "NodeIndex":
        return cls([str(i) for i in range(n)])

    @classmethod
    def from_tokens(cls, tokens) -> "NodeIndex":
        seen = list(dict.fromkeys(tokens))
        try:
            as_int = [int(t) for t in seen]
        except ValueError:
            return cls(seen)
        order = np.argsort(as_int, kind="stable")
        return cls([seen[k] for k in order])

    def __len__(self):
        return len(self.external)

    def __contains__(self, ext):
        return str(ext) in self._lookup

    def internal(self, ext, path=None, line=None) -> int:
        try:
            return self._lookup[str(ext)]
        except KeyError:
            raise ParseError(f"unknown node id {ext!r}", path, line) from None


def _data_lines(path):
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _weight(tok, path, lineno):
    try:
        w = float(tok)
    except ValueError:
        raise ParseError(f"bad weight {tok!r}", path, lineno) from None
    return w


def read_edge_tsv(path, index: NodeIndex | None = None, fallback: bool = False) -> tuple[SparseGraph, NodeIndex]:
    """Read ``i<TAB>j[<TAB>w]`` lines (``w`` defaults to 1.0)."""
    rows = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) not in (2, 3) or not all(p.strip() for p in parts):
            raise ParseError(f"expected 2 or 3 tab-separated fields, got {len(parts)}", path, lineno)
        w = _weight(parts[2], path, lineno) if len(parts) == 3 else 1.0
        rows.append((parts[0].strip(), parts[1].strip(), w, lineno))
    if index is None:
        index = NodeIndex.from_tokens(t for r in rows for t in r[:2])
    recs = [(index.internal(u, path, ln), index.internal(v, path, ln), w) for u, v, w, ln in rows]
    return build_graph(recs, n=len(index), fallback=fallback), index


def write_edge_tsv(G: SparseGraph, path, index: NodeIndex | None = None):
    i, j, w = G.edges()
    ext = index.external if index is not None else None
    with open(path, "w") as fh:
        for a, b, x in zip(i, j, w):
            u, v = (ext[a], ext[b]) if ext else (a, b)
            fh.write(f"{u}\t{v}\t{float(x)!r}\n")


def read_triangle_tsv(path, index: NodeIndex) -> TriangleTensor:
    """Read ``i<TAB>j<TAB>k[<TAB>w]`` lines against an existing node index."""
    recs = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(parts)}", path, lineno)
        ids = [index.internal(p.strip(), path, lineno) for p in parts[:3]]
        w = _weight(parts[3], path, lineno) if len(parts) == 4 else 1.0
        recs.append((*ids, w))
    return build_triangle_tensor(recs, len(index))


def write_triangle_tsv(T: TriangleTensor, path, index: NodeIndex | None = None):
    ext = index.external if index is not None else None
    with open(path, "w") as fh:
        for (a, b, c), w in zip(T.triples, T.tau):
            ids = (ext[a], ext[b], ext[c]) if ext else (a, b, c)
            fh.write("\t".join(str(x) for x in ids) + f"\t{float(w)!r}\n")


def read_node_map(path) -> NodeIndex:
    """CSV ``external_id,internal_id`` with internal ids forming ``0..n-1``."""
    pairs = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["external_id", "internal_id"]:
            raise ParseError("node map needs header 'external_id,internal_id'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 2 fields", path, lineno)
            try:
                k = int(row[1])
            except ValueError:
                raise ParseError(f"bad internal id {row[1]!r}", path, lineno) from None
            if k in pairs:
                raise ParseError(f"internal id {k} repeated", path, lineno)
            pairs[k] = row[0].strip()
    if sorted(pairs) != list(range(len(pairs))):
        raise ShapeError("internal ids must be exactly 0..n-1")
    return NodeIndex([pairs[k] for k in range(len(pairs))])


def write_node_map(index: NodeIndex, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["external_id", "internal_id"])
        for i, e in enumerate(index.external):
            w.writerow([e, i])


def read_point_csv(path) -> PointCloud:
    """Header ``id,f1,...,fd[,label]``; a trailing ``label`` column is optional."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "id":
            raise ParseError("point CSV must start with an 'id' column", path, 1)
        has_label = header[-1].strip() == "label"
        d = len(header) - 1 - int(has_label)
        if d < 1:
            raise ParseError("point CSV needs at least one feature column", path, 1)
        ids, feats, labels = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            ids.append(row[0].strip())
            try:
                feats.append([float(x) for x in row[1:1 + d]])
                if has_label:
                    labels.append(int(row[-1]))
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
    return PointCloud(np.array(feats, dtype=np.float64).reshape(len(ids), d),
                      np.array(labels, dtype=np.int64) if has_label else None, ids)


def write_point_csv(P: PointCloud, path):
    d = P.X.shape[1]
    ids = P.ids if P.ids is not None else [str(i) for i in range(P.n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"f{i + 1}" for i in range(d)] + (["label"] if P.labels is not None else []))
        for r in range(P.n):
            row = [ids[r]] + [repr(float(x)) for x in P.X[r]]
            if P.labels is not None:
                row.append(int(P.labels[r]))
            w.writerow(row)


def read_label_csv(path, index: NodeIndex) -> np.ndarray:
    """CSV ``id,label``; returns a length-n array with -1 for unlisted nodes."""
    out = np.full(len(index), -1, dtype=np.int64)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "label"]:
            raise ParseError("label CSV needs header 'id,label'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 2 fields", path, lineno)
            i = index.internal(row[0].strip(), path, lineno)
            try:
                lab = int(row[1])
            except ValueError:
                raise ParseError(f"bad label {row[1]!r}", path, lineno) from None
            if lab < 0:
                raise ParseError("labels must be >= 0", path, lineno)
            out[i] = lab
    return out


def write_label_csv(labels, path, index: NodeIndex | None = None, mask=None):
    labels = np.asarray(labels)
    ext = index.external if index is not None else [str(i) for i in range(len(labels))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for i, lab in enumerate(labels):
            if (mask is None or mask[i]) and lab >= 0:
                w.writerow([ext[i], int(lab)])


def write_predictions(pred, path, index: NodeIndex | None = None):
    pred = np.asarray(pred)
    ext = index.external if index is not None else [str(i) for i in range(len(pred))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "predicted_label"])
        for i, p in enumerate(pred):
            w.writerow([ext[i], int(p)])


def write_diagnostics(result, path, classes=None):
    """Per-iteration CSV ``class,iter,rel_change,phi_g`` from a spread result."""
    h = result.history
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "iter", "rel_change", "phi_g"])
        order = np.lexsort((h[:, 1], h[:, 0])) if len(h) else []
        for r in order:
            col, it, rc, ph = h[r]
            cls = classes[int(col)] if classes is not None else int(col)
            w.writerow([cls, int(it), repr(float(rc)), "" if np.isnan(ph) else repr(float(ph))])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
