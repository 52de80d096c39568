"""Centered-belief propagation with a trainable compatibility parameter.

Stage S2 of the model: prior beliefs are centered around zero, pushed along
edges through a square matrix hbar, with an echo-cancellation correction on
intermediate layers, then row-softmaxed back into distributions. hbar is
initialized from a Sinkhorn-normalized training-set estimate and can be
decoded back into a stochastic compatibility estimate after training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConvergenceError, InputError, ShapeError
from .graph import LabelAssignment, SparseGraph

__all__ = [
    "PropagationConfig",
    "CompatParam",
    "center_beliefs",
    "propagate",
    "final_beliefs",
    "sinkhorn_knopp",
    "init_hbar",
    "recover_h",
    "h_estimation_error",
]


@dataclass(frozen=True)
class PropagationConfig:
    num_layers: int = 1                # hop count; 1 or 2 in practice
    activation: str = "identity"       # identity keeps negative evidence intact
    echo_cancellation: bool = True

    def __post_init__(self):
        if self.num_layers < 1:
            raise InputError("num_layers must be >= 1")
        if self.activation not in ("identity", "relu"):
            raise InputError(f"unsupported activation {self.activation!r}")


@dataclass(eq=False)
class CompatParam:
    """Trainable zero-centered compatibility parameter and its init snapshot."""
    hbar: ad.Tensor
    hbar0: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.hbar.value.shape[0]


def center_beliefs(bp: ad.Tensor) -> ad.Tensor:
    """Shift rows of a belief matrix to sum to zero: subtract 1/|Y|."""
    return ad.broadcast_sub_scalar(bp, 1.0 / bp.value.shape[1])


def _activate(z: ad.Tensor, cfg: PropagationConfig) -> ad.Tensor:
    return ad.relu(z) if cfg.activation == "relu" else z


def propagate(g: SparseGraph, b0: ad.Tensor, cp: CompatParam,
              cfg: PropagationConfig) -> ad.Tensor:
    """K layers of compatibility-guided aggregation.

    Layers 1..K-1: sigma(b0 + A b H - D b H^2), where the D term removes the
    component of a node's own belief reflected straight back by a neighbor.
    Layer K: sigma(b0 + A b H), no echo term (messages are not sent onward).
    """
    if b0.value.shape != (g.n, cp.num_classes):
        raise ShapeError("propagate", b0.value.shape, cp.hbar.value.shape)
    adj = g.adjacency
    deg = g.degree_matrix
    b = b0
    for _ in range(cfg.num_layers - 1):
        bh = ad.matmul(b, cp.hbar)
        z = ad.add(b0, ad.spmm(adj, bh))
        if cfg.echo_cancellation:
            echo = ad.matmul(ad.spmm(deg, bh), cp.hbar)
            z = ad.sub(z, echo)
        b = _activate(z, cfg)
    return _activate(ad.add(b0, ad.spmm(adj, ad.matmul(b, cp.hbar))), cfg)


def final_beliefs(bk: ad.Tensor) -> ad.Tensor:
    """Class distributions from the propagated (signed) beliefs."""
    return ad.row_softmax(bk)


def sinkhorn_knopp(m: np.ndarray, tol: float = 1e-8,
                   max_iters: int = 1000) -> np.ndarray:
    """Scale a nonnegative square matrix to doubly stochastic form.

    Alternates column and row normalization, ending on rows, so returned row
    sums are exact to float precision and column sums are within tol.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"sinkhorn_knopp needs a square matrix, got {a.shape}")
    if np.any(a < 0):
        raise InputError("sinkhorn_knopp needs nonnegative entries")
    if np.any(a.sum(axis=0) == 0) or np.any(a.sum(axis=1) == 0):
        raise InputError("sinkhorn_knopp: zero row or column; smooth the input first")
    if max_iters < 1:
        raise InputError("sinkhorn_knopp: max_iters must be >= 1")
    a = a.copy()
    for _ in range(max_iters):
        a /= a.sum(axis=0, keepdims=True)
        a /= a.sum(axis=1, keepdims=True)
        worst = np.abs(a.sum(axis=0) - 1.0).max()
        if worst <= tol:
            return a
    raise ConvergenceError(
        f"sinkhorn_knopp: column sums off by {worst:.3e} after {max_iters} iterations")


def _smooth(raw: np.ndarray) -> np.ndarray:
    """Additive floor guaranteeing total support: per row, 1e-6 of the row max
    (or 1e-6 outright when the whole row is zero)."""
    row_max = raw.max(axis=1)
    eps = 1e-6 * np.where(row_max > 0, row_max, 1.0)
    return raw + eps[:, None]


def init_hbar(g: SparseGraph, labels: LabelAssignment, train_mask,
              bp: np.ndarray) -> CompatParam:
    """Estimate the compatibility parameter from training labels and priors.

    Training rows of the belief matrix are replaced by their one-hot labels,
    the class-to-class flow (masked Y)^T A B is accumulated, Sinkhorn-scaled
    to doubly stochastic, then centered by -1/|Y|. Rows of the result sum to
    zero to float precision.
    """
    mask = np.asarray(train_mask, dtype=bool)
    if not mask.any():
        raise InputError("init_hbar: empty training mask")
    bp = np.asarray(bp, dtype=np.float64)
    if bp.shape != (g.n, labels.num_classes):
        raise ShapeError("init_hbar", bp.shape, (g.n, labels.num_classes))
    seen = np.bincount(labels.y[mask], minlength=labels.num_classes)
    if (seen == 0).any():
        missing = int(np.flatnonzero(seen == 0)[0])
        raise InputError(f"init_hbar: class {missing} has no training nodes; "
                         "its compatibility row would be arbitrary")
    enhanced = np.where(mask[:, None], labels.onehot, bp)
    masked_y = labels.onehot * mask[:, None]
    raw = masked_y.T @ (g.adjacency @ enhanced)
    # near-blocked flow patterns scale slowly; init failure is fatal to
    # training, so spend a bigger iteration budget here than the default
    hhat = sinkhorn_knopp(_smooth(raw), max_iters=20000)
    hbar0 = hhat - 1.0 / labels.num_classes
    return CompatParam(hbar=ad.parameter(hbar0), hbar0=hbar0.copy())


def recover_h(cp: CompatParam) -> np.ndarray:
    """Decode the trained parameter back to a stochastic compatibility
    estimate: undo the centering, clamp the negative drift, re-Sinkhorn."""
    shifted = np.maximum(cp.hbar.value + 1.0 / cp.num_classes, 0.0)
    return sinkhorn_knopp(_smooth(shifted), max_iters=20000)


def h_estimation_error(hhat: np.ndarray, htrue: np.ndarray) -> float:
    """Mean absolute elementwise difference between two |Y| x |Y| matrices."""
    hhat = np.asarray(hhat, dtype=np.float64)
    htrue = np.asarray(htrue, dtype=np.float64)
    if hhat.shape != htrue.shape:
        raise ShapeError("h_estimation_error", hhat.shape, htrue.shape)
    return float(np.abs(hhat - htrue).sum() / hhat.size)
