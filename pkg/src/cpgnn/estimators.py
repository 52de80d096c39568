"""Prior-belief estimators: a graph-agnostic MLP and a 2nd-order Chebyshev
spectral convolution. Both map node features to class logits; beliefs are the
row softmax of the final logits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .errors import InputError
from .graph import SparseGraph, normalized_laplacian_tilde

__all__ = [
    "EstimatorConfig",
    "MlpEstimator",
    "ChebyEstimator",
    "build_estimator",
    "prior_beliefs",
    "glorot_init",
]


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "mlp"                  # "mlp" | "cheby"
    hidden_dims: tuple[int, ...] = (64,)
    cheby_order: int = 2
    dropout: float = 0.0
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in ("mlp", "cheby"):
            raise InputError(f"unknown estimator kind {self.kind!r}")
        if not self.hidden_dims:
            raise InputError("hidden_dims must be non-empty")
        if self.cheby_order < 1:
            raise InputError("cheby_order must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise InputError("dropout must lie in [0, 1)")
        if self.activation != "relu":
            raise InputError(f"unsupported activation {self.activation!r}")


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> ad.Tensor:
    """Uniform on +-sqrt(6 / (rows + cols))."""
    bound = np.sqrt(6.0 / (rows + cols))
    return ad.parameter(rng.uniform(-bound, bound, size=(rows, cols)))


def _project(x, w: ad.Tensor) -> ad.Tensor:
    """x @ w where x is a Tensor, dense array, or sparse constant."""
    if isinstance(x, ad.Tensor):
        return ad.matmul(x, w)
    if sp.issparse(x):
        return ad.spmm(x, w)
    return ad.matmul(ad.constant(x), w)


class MlpEstimator:
    """Stack of linear layers, ReLU between them; final layer is linear
    (softmax is applied downstream by prior_beliefs)."""

    def __init__(self, cfg: EstimatorConfig, in_dim: int, num_classes: int,
                 rng: np.random.Generator):
        self.cfg = cfg
        dims = [in_dim, *cfg.hidden_dims, num_classes]
        self.weights = [glorot_init(dims[k], dims[k + 1], rng) for k in range(len(dims) - 1)]

    @property
    def params(self) -> list[ad.Tensor]:
        return list(self.weights)

    def forward(self, x, training: bool = False,
                rng: np.random.Generator | None = None) -> ad.Tensor:
        h = x
        for k, w in enumerate(self.weights):
            z = _project(h, w)
            if k < len(self.weights) - 1:
                z = ad.relu(z)
                if training and self.cfg.dropout > 0.0:
                    z = ad.dropout(z, self.cfg.dropout, rng)
            h = z
        return h


class ChebyEstimator:
    """Spectral convolution on L_tilde = -D^(-1/2) A D^(-1/2). Each layer sums
    T_i(L_tilde) @ R @ W_i for i = 0..order, with T_0 = I, T_1 = L_tilde and
    T_i = 2 L_tilde T_{i-1} - T_{i-2}. The recursion runs on the projected
    dense matrices R @ W_i; powers of L_tilde are never materialized."""

    def __init__(self, cfg: EstimatorConfig, in_dim: int, num_classes: int,
                 g: SparseGraph, rng: np.random.Generator):
        self.cfg = cfg
        self.lap = normalized_laplacian_tilde(g)
        dims = [in_dim, *cfg.hidden_dims, num_classes]
        self.weights = [
            [glorot_init(dims[k], dims[k + 1], rng) for _ in range(cfg.cheby_order + 1)]
            for k in range(len(dims) - 1)
        ]

    @property
    def params(self) -> list[ad.Tensor]:
        return [w for layer in self.weights for w in layer]

    def _t_apply(self, p: ad.Tensor, i: int) -> ad.Tensor:
        """T_i(L_tilde) @ p via the Chebyshev recursion."""
        if i == 0:
            return p
        prev2, prev1 = p, ad.spmm(self.lap, p)
        for _ in range(2, i + 1):
            cur = ad.sub(ad.scalar_mul(ad.spmm(self.lap, prev1), 2.0), prev2)
            prev2, prev1 = prev1, cur
        return prev1

    def _layer(self, r, layer_weights: list[ad.Tensor]) -> ad.Tensor:
        out = None
        for i, w in enumerate(layer_weights):
            term = self._t_apply(_project(r, w), i)
            out = term if out is None else ad.add(out, term)
        return out

    def forward(self, x, training: bool = False,
                rng: np.random.Generator | None = None) -> ad.Tensor:
        h = x
        for k, layer_weights in enumerate(self.weights):
            z = self._layer(h, layer_weights)
            if k < len(self.weights) - 1:
                z = ad.relu(z)
                if training and self.cfg.dropout > 0.0:
                    z = ad.dropout(z, self.cfg.dropout, rng)
            h = z
        return h


def build_estimator(cfg: EstimatorConfig, in_dim: int, num_classes: int,
                    g: SparseGraph | None, rng: np.random.Generator):
    if cfg.kind == "mlp":
        return MlpEstimator(cfg, in_dim, num_classes, rng)
    if g is None:
        raise InputError("cheby estimator needs the graph")
    return ChebyEstimator(cfg, in_dim, num_classes, g, rng)


def prior_beliefs(logits: ad.Tensor) -> ad.Tensor:
    """Per-node class distributions from final-layer logits."""
    return ad.row_softmax(logits)
