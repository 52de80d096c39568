"""Undirected graph storage and graph-level label statistics.

Graphs are simple (no self-loops, no duplicate edges) and immutable after
construction; all mutating work happens inside :func:`build_graph`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import InputError

__all__ = [
    "SparseGraph",
    "LabelAssignment",
    "build_graph",
    "class_edge_counts",
    "homophily_ratio",
    "empirical_compatibility",
    "normalized_laplacian_tilde",
]


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Simple undirected graph in CSR form.

    ``edges`` holds each undirected edge once as (u, v) with u < v;
    ``indptr``/``indices`` describe the symmetric adjacency structure.
    """

    n: int
    edges: np.ndarray    # (E, 2) int64, u < v, lexicographically sorted
    indptr: np.ndarray   # (n+1,) int64
    indices: np.ndarray  # (2E,) int64
    degree: np.ndarray   # (n,) int64

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix (float64, no self-loops)."""
        data = np.ones(self.indices.shape[0], dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def degree_matrix(self) -> sp.csr_matrix:
        """Diagonal degree matrix of the simple graph."""
        return sp.diags(self.degree.astype(np.float64), format="csr")

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]


@dataclass(frozen=True, eq=False)
class LabelAssignment:
    """Per-node class ids in 0..num_classes-1 with a one-hot view."""

    y: np.ndarray
    num_classes: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "y", y)
        if y.ndim != 1:
            raise InputError("labels must be a 1-D array of class ids")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise InputError(
                f"class ids must lie in [0, {self.num_classes}); "
                f"got range [{y.min()}, {y.max()}]"
            )

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @cached_property
    def onehot(self) -> np.ndarray:
        out = np.zeros((self.n, self.num_classes), dtype=np.float64)
        out[np.arange(self.n), self.y] = 1.0
        return out

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.num_classes)


def build_graph(edge_list, n: int) -> SparseGraph:
    """Build a SparseGraph from raw (u, v) pairs.

    Self-loops are dropped and duplicates (in either orientation) are
    deduplicated. Endpoints outside [0, n) raise InputError.
    """
    if n < 0:
        raise InputError(f"node count must be nonnegative, got {n}")
    pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
        raise InputError(f"edge endpoint out of range for n={n}: ({bad[0]}, {bad[1]})")

    pairs = pairs[pairs[:, 0] != pairs[:, 1]]  # drop self-loops
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0) if pairs.size else np.zeros((0, 2), np.int64)

    # symmetric CSR from both edge orientations
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    degree = np.bincount(src, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degree, out=indptr[1:])
    order = np.lexsort((dst, src))
    indices = dst[order]
    return SparseGraph(n=n, edges=edges, indptr=indptr, indices=indices, degree=degree)


def class_edge_counts(g: SparseGraph, labels: LabelAssignment) -> np.ndarray:
    """Matrix C with C[i, j] = number of ordered edge endpoints class i -> class j.

    Each undirected edge contributes to both (y_u, y_v) and (y_v, y_u), so C is
    symmetric and sums to 2|E|.
    """
    if labels.n != g.n:
        raise InputError(f"labels cover {labels.n} nodes, graph has {g.n}")
    c = labels.num_classes
    counts = np.zeros((c, c), dtype=np.int64)
    if g.num_edges:
        yu = labels.y[g.edges[:, 0]]
        yv = labels.y[g.edges[:, 1]]
        np.add.at(counts, (yu, yv), 1)
        np.add.at(counts, (yv, yu), 1)
    return counts


def homophily_ratio(g: SparseGraph, labels: LabelAssignment) -> float:
    """Fraction of edge endpoints joining same-class nodes, in [0, 1]."""
    if g.num_edges == 0:
        raise InputError("homophily ratio is undefined on an edgeless graph")
    counts = class_edge_counts(g, labels)
    return float(np.trace(counts) / counts.sum())


def empirical_compatibility(g: SparseGraph, labels: LabelAssignment) -> np.ndarray:
    """Row-stochastic class-to-class connection probabilities.

    Row i is the distribution over neighbor classes seen from class-i edge
    endpoints. A class with no edge endpoints has no such distribution and
    raises InputError.
    """
    counts = class_edge_counts(g, labels).astype(np.float64)
    row_sums = counts.sum(axis=1)
    empty = np.flatnonzero(row_sums == 0)
    if empty.size:
        raise InputError(
            f"class {empty[0]} has zero edge endpoints; compatibility row undefined"
        )
    return counts / row_sums[:, None]


def normalized_laplacian_tilde(g: SparseGraph) -> sp.csr_matrix:
    """Shifted normalized Laplacian -D^(-1/2) A D^(-1/2).

    Isolated nodes use the convention d^(-1/2) = 0, giving zero rows/columns.
    """
    d = g.degree.astype(np.float64)
    with np.errstate(divide="ignore"):
        dinv_sqrt = np.where(d > 0, d ** -0.5, 0.0)
    scale = sp.diags(dinv_sqrt)
    return (-(scale @ g.adjacency @ scale)).tocsr()
