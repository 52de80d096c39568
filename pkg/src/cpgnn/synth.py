"""Synthetic benchmark graphs with a controlled class-compatibility matrix.

Generation follows a modified preferential attachment: after a short chain
bootstrap, each new node v picks m distinct existing targets without
replacement, with weight proportional to compat[y_v, y_u] * degree[u]. The
resulting degree distribution stays heavy-tailed while the measured
class-to-class link probabilities approach the target matrix as n grows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InputError
from .graph import LabelAssignment, SparseGraph, build_graph

__all__ = [
    "SynthConfig",
    "ReferenceFeatures",
    "make_target_compat",
    "generate",
    "transfer_features",
    "gaussian_pools",
]

_ROW_SUM_TOL = 1e-9


def make_target_compat(num_classes: int, h: float) -> np.ndarray:
    """Target compatibility with diagonal h and the leftover 1-h spread
    uniformly over the off-diagonal entries of each row."""
    if not 0.0 <= h <= 1.0:
        raise InputError(f"diagonal value must lie in [0, 1], got {h}")
    if num_classes < 1:
        raise InputError("num_classes must be >= 1")
    if num_classes == 1:
        if abs(h - 1.0) > _ROW_SUM_TOL:
            raise InputError("a single class forces h = 1")
        return np.ones((1, 1))
    out = np.full((num_classes, num_classes), (1.0 - h) / (num_classes - 1))
    np.fill_diagonal(out, h)
    return out


@dataclass(frozen=True, eq=False)
class SynthConfig:
    class_sizes: tuple[int, ...]
    seed_nodes: int                    # n0, bootstrap chain length
    edges_per_node: int                # m
    target_compat: np.ndarray = field(repr=False)
    rng_seed: int = 0

    def __post_init__(self):
        sizes = np.asarray(self.class_sizes, dtype=np.int64)
        if sizes.ndim != 1 or sizes.size == 0 or np.any(sizes <= 0):
            raise InputError("class_sizes must be positive integers")
        object.__setattr__(self, "class_sizes", tuple(int(s) for s in sizes))
        h = np.asarray(self.target_compat, dtype=np.float64)
        c = sizes.size
        if h.shape != (c, c):
            raise InputError(f"target_compat must be {c}x{c}, got {h.shape}")
        if np.any(h < 0):
            raise InputError("target_compat entries must be nonnegative")
        if np.any(np.abs(h.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
            raise InputError("target_compat rows must each sum to 1")
        object.__setattr__(self, "target_compat", h.copy())
        if self.edges_per_node < 1:
            raise InputError("edges_per_node must be >= 1")
        if self.seed_nodes < 2:
            # the bootstrap chain must contain an edge; degree-0 nodes carry
            # zero attachment weight forever
            raise InputError("seed_nodes must be >= 2")
        if not self.edges_per_node <= self.seed_nodes < self.n:
            raise InputError(
                f"need edges_per_node <= seed_nodes < total nodes, got "
                f"m={self.edges_per_node}, n0={self.seed_nodes}, n={self.n}")

    @property
    def num_classes(self) -> int:
        return len(self.class_sizes)

    @property
    def n(self) -> int:
        return int(sum(self.class_sizes))


def generate(cfg: SynthConfig) -> tuple[SparseGraph, LabelAssignment]:
    """Deterministic in cfg.rng_seed, byte-for-byte on the edge list.

    Raises GenerationError when, at some attachment step, fewer than m
    existing nodes carry positive weight (e.g. a compat row of zeros against
    every class present so far). Retrying with a different seed reshuffles
    the label order and usually clears it.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n, n0, m = cfg.n, cfg.seed_nodes, cfg.edges_per_node
    y = np.repeat(np.arange(cfg.num_classes, dtype=np.int64),
                  np.asarray(cfg.class_sizes, dtype=np.int64))
    rng.shuffle(y)

    compat = cfg.target_compat
    edges = np.empty(((n0 - 1) + (n - n0) * m, 2), dtype=np.int64)
    degree = np.zeros(n, dtype=np.float64)

    # bootstrap: chain over the first n0 nodes
    chain = np.arange(n0 - 1, dtype=np.int64)
    edges[:n0 - 1, 0] = chain
    edges[:n0 - 1, 1] = chain + 1
    degree[:n0] = 2.0
    degree[0] = degree[n0 - 1] = 1.0
    pos = n0 - 1

    for v in range(n0, n):
        w = compat[y[v], y[:v]] * degree[:v]
        candidates = np.flatnonzero(w)
        if candidates.size < m:
            raise GenerationError(
                f"attaching node {v} (class {int(y[v])}): only "
                f"{candidates.size} positive-weight candidates, need {m}")
        weights = w[candidates]
        picked = np.empty(m, dtype=np.int64)
        for j in range(m):
            cum = np.cumsum(weights)
            k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            if k >= candidates.size or weights[k] == 0.0:
                # float boundary: fall back to the last still-available candidate
                k = int(np.flatnonzero(weights)[-1])
            picked[j] = candidates[k]
            weights[k] = 0.0  # without replacement
        edges[pos:pos + m, 0] = picked
        edges[pos:pos + m, 1] = v
        pos += m
        degree[picked] += 1.0
        degree[v] = float(m)

    g = build_graph(edges, n)
    return g, LabelAssignment(y=y, num_classes=cfg.num_classes)


@dataclass(frozen=True)
class ReferenceFeatures:
    """Per-class pools of feature vectors to copy onto same-class synthetic
    nodes; each pool row is one reference node's feature vector."""
    pools: dict[int, np.ndarray]
    surrogate: bool = False            # True when pools are synthesized

    def __post_init__(self):
        if not self.pools:
            raise InputError("ReferenceFeatures needs at least one class pool")
        dims = {p.shape[1] for p in self.pools.values()}
        if len(dims) != 1:
            raise InputError(f"pools disagree on feature dimension: {sorted(dims)}")

    @property
    def feature_dim(self) -> int:
        return next(iter(self.pools.values())).shape[1]

    @classmethod
    def from_arrays(cls, features: np.ndarray, labels: LabelAssignment) -> "ReferenceFeatures":
        features = np.asarray(features, dtype=np.float64)
        pools = {c: features[labels.y == c] for c in range(labels.num_classes)}
        return cls(pools={c: p for c, p in pools.items() if p.shape[0] > 0})


def gaussian_pools(num_classes: int, pool_size: int, feature_dim: int,
                   mean_separation: float, rng_seed: int) -> ReferenceFeatures:
    """Surrogate pools when no reference graph is available: class c draws
    from N(mean_separation * e_c, I). Requires feature_dim >= num_classes so
    the class means stay mutually equidistant."""
    if feature_dim < num_classes:
        raise InputError("gaussian_pools needs feature_dim >= num_classes")
    if pool_size < 1:
        raise InputError("pool_size must be >= 1")
    rng = np.random.default_rng(rng_seed)
    pools = {}
    for c in range(num_classes):
        mean = np.zeros(feature_dim)
        mean[c] = mean_separation
        pools[c] = mean + rng.standard_normal((pool_size, feature_dim))
    return ReferenceFeatures(pools=pools, surrogate=True)


def transfer_features(labels: LabelAssignment, ref: ReferenceFeatures,
                      rng_seed: int) -> np.ndarray:
    """Copy reference features onto synthetic nodes: an injection, so distinct
    nodes receive distinct pool rows, and only from their own class's pool."""
    rng = np.random.default_rng(rng_seed)
    x = np.empty((labels.n, ref.feature_dim), dtype=np.float64)
    for c in range(labels.num_classes):
        nodes = np.flatnonzero(labels.y == c)
        if nodes.size == 0:
            continue
        pool = ref.pools.get(c)
        if pool is None or pool.shape[0] < nodes.size:
            have = 0 if pool is None else pool.shape[0]
            raise InputError(
                f"class {c}: pool holds {have} feature vectors, "
                f"need {nodes.size} for an injection")
        rows = rng.choice(pool.shape[0], size=nodes.size, replace=False)
        x[nodes] = pool[rows]
    return x
