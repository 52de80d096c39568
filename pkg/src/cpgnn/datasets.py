"""Dataset container and plain-text file I/O.

Formats:
  edges     one "u v" pair per line, 0-based ids; blank lines and lines
            starting with '#' are ignored
  labels    one "node_id class_id" per line; every node 0..n-1 must appear
            exactly once, n is inferred from the file
  features  dense: one whitespace-separated row of floats per node;
            sparse: a first line "# sparse <n> <dim>" followed by
            "node col value" triplets (detected by that header)
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .graph import (LabelAssignment, SparseGraph, build_graph,
                    homophily_ratio)

__all__ = [
    "LabeledDataset",
    "load_dataset",
    "featureless",
    "dataset_stats",
    "write_edge_list",
    "write_labels",
    "write_features",
]

_SPARSE_HEADER = "# sparse"


@dataclass(eq=False)
class LabeledDataset:
    graph: SparseGraph
    labels: LabelAssignment
    features: object                   # dense ndarray or scipy sparse matrix
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_classes(self) -> int:
        return self.labels.num_classes

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def with_masks(self, train, val, test) -> "LabeledDataset":
        return replace(self, train_mask=np.asarray(train, dtype=bool),
                       val_mask=np.asarray(val, dtype=bool),
                       test_mask=np.asarray(test, dtype=bool))


def _content_lines(path: str):
    """Yield (line_number, stripped_text) skipping blanks and '#' comments."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, text


def _parse_edges(path: str) -> list[tuple[int, int]]:
    edges = []
    for lineno, text in _content_lines(path):
        parts = text.split()
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 'u v', got {text!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-integer node id in {text!r}") from None
    return edges


def _parse_labels(path: str) -> LabelAssignment:
    pairs = {}
    for lineno, text in _content_lines(path):
        parts = text.split()
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 'node_id class_id', got {text!r}")
        try:
            node, cls = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-integer value in {text!r}") from None
        if node in pairs:
            raise InputError(f"{path}:{lineno}: node {node} labeled twice")
        if node < 0 or cls < 0:
            raise InputError(f"{path}:{lineno}: negative id in {text!r}")
        pairs[node] = cls
    if not pairs:
        raise InputError(f"{path}: no labels found")
    n = max(pairs) + 1
    missing = [v for v in range(n) if v not in pairs]
    if missing:
        raise InputError(f"{path}: nodes without labels: {missing[:10]}"
                         + ("..." if len(missing) > 10 else ""))
    y = np.array([pairs[v] for v in range(n)], dtype=np.int64)
    return LabelAssignment(y=y, num_classes=int(y.max()) + 1)


def _parse_features(path: str, n: int):
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if first.strip().lower().startswith(_SPARSE_HEADER):
        parts = first.split()
        if len(parts) != 4:
            raise InputError(f"{path}:1: sparse header must be '# sparse <n> <dim>'")
        rows, cols = int(parts[2]), int(parts[3])
        if rows != n:
            raise InputError(f"{path}:1: sparse header says {rows} nodes, labels say {n}")
        ri, ci, vals = [], [], []
        for lineno, text in _content_lines(path):
            parts = text.split()
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 'node col value', got {text!r}")
            try:
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise InputError(f"{path}:{lineno}: malformed triplet {text!r}") from None
            if not 0 <= r < rows or not 0 <= c < cols:
                raise InputError(f"{path}:{lineno}: index ({r}, {c}) outside {rows}x{cols}")
            ri.append(r)
            ci.append(c)
            vals.append(v)
        return sp.csr_matrix((vals, (ri, ci)), shape=(rows, cols), dtype=np.float64)

    rows = []
    width = None
    for lineno, text in _content_lines(path):
        try:
            row = [float(tok) for tok in text.split()]
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric feature value") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"{path}:{lineno}: row has {len(row)} values, expected {width}")
        rows.append(row)
    if len(rows) != n:
        raise InputError(f"{path}: {len(rows)} feature rows for {n} labeled nodes")
    return np.asarray(rows, dtype=np.float64)


def load_dataset(edge_path: str, label_path: str, feature_path: str | None = None,
                 featureless_mode: bool = False) -> LabeledDataset:
    """Assemble a dataset from text files.

    In featureless mode the feature file is never opened; features become the
    n x n sparse identity.
    """
    labels = _parse_labels(label_path)
    n = labels.n
    edges = _parse_edges(edge_path)
    for u, v in edges:
        if u >= n or v >= n:
            raise InputError(
                f"{edge_path}: edge ({u}, {v}) references a node without a label")
    graph = build_graph(edges, n)
    if featureless_mode:
        x = sp.identity(n, dtype=np.float64, format="csr")
    elif feature_path is not None:
        x = _parse_features(feature_path, n)
    else:
        x = sp.identity(n, dtype=np.float64, format="csr")
    return LabeledDataset(graph=graph, labels=labels, features=x)


def featureless(ds: LabeledDataset) -> LabeledDataset:
    """Replace features with the sparse identity (structure-only learning)."""
    return replace(ds, features=sp.identity(ds.n, dtype=np.float64, format="csr"))


def dataset_stats(ds: LabeledDataset) -> dict:
    return {
        "nodes": ds.n,
        "edges": ds.graph.num_edges,
        "classes": ds.num_classes,
        "feature_dim": ds.feature_dim,
        "homophily_ratio": homophily_ratio(ds.graph, ds.labels),
    }


def write_edge_list(path: str, g: SparseGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def write_labels(path: str, labels: LabelAssignment) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v, c in enumerate(labels.y):
            fh.write(f"{v} {c}\n")


def write_features(path: str, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(x, dtype=np.float64):
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")
