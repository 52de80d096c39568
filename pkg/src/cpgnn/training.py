"""Training schedules: estimator pretraining, joint optimization of the
propagation model with its compatibility parameter, and the built-in
baselines (plain MLP, spectral convolution, simplified graph convolution).

The joint loss is CE(final beliefs) + eta * (CE(prior beliefs) + lambda_p *
L2(estimator params)) + Phi(hbar), where Phi penalizes nonzero row sums of
the centered compatibility parameter. Ablation flags cut individual pieces.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .datasets import LabeledDataset
from .errors import InputError, TrainingError
from .estimators import EstimatorConfig, build_estimator, glorot_init
from .graph import LabelAssignment
from .propagation import (CompatParam, PropagationConfig, center_beliefs,
                          final_beliefs, init_hbar, propagate, recover_h,
                          h_estimation_error)

__all__ = [
    "TrainConfig",
    "TrainReport",
    "AdamState",
    "make_splits",
    "pretrain",
    "cpgnn_forward",
    "joint_loss",
    "sgc_forward",
    "train_full",
    "train_baseline",
    "CpgnnModel",
    "accuracy",
]


@dataclass(frozen=True)
class TrainConfig:
    pretrain_iters: int = 400          # beta_1
    max_epochs: int = 2000
    patience: int = 200                # epochs without val-accuracy improvement
    learning_rate: float = 0.01
    lambda_p: float = 5e-4
    eta: float = 1.0                   # co-training weight
    rng_seed: int = 0
    no_hbar_init: bool = False         # glorot hbar instead of the estimate
    no_hbar_reg: bool = False          # drop Phi(hbar)
    no_cotrain: bool = False           # eta = 0: drop the whole prior-loss term
    no_pretrain: bool = False          # skip the beta_1 warmup phase

    def __post_init__(self):
        if min(self.pretrain_iters, self.max_epochs, self.patience) < 0:
            raise InputError("iteration counts must be nonnegative")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.lambda_p < 0 or self.eta < 0:
            raise InputError("loss weights must be nonnegative")
        if self.patience > self.max_epochs:
            raise InputError("patience cannot exceed max_epochs")


@dataclass
class TrainReport:
    total_loss: list[float] = field(default_factory=list)
    ce_final: list[float] = field(default_factory=list)
    cotrain: list[float] = field(default_factory=list)     # eta * prior loss
    phi: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)
    delta_h: list[float] = field(default_factory=list)     # empty unless true H given
    best_epoch: int = -1
    best_val_acc: float = 0.0
    test_acc_at_best: float = 0.0
    wall_clock_s: float = 0.0


@dataclass(eq=False)
class CpgnnModel:
    estimator: object
    cp: CompatParam
    prop_cfg: PropagationConfig


class AdamState:
    """Adaptive-moment optimizer state; beta 0.9/0.999, eps 1e-8."""

    def __init__(self, params):
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]
        self.t = 0

    def step(self, params, lr: float) -> None:
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        for k, p in enumerate(params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.value)
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            mhat = self.m[k] / (1 - b1 ** self.t)
            vhat = self.v[k] / (1 - b2 ** self.t)
            p.value = p.value - lr * mhat / (np.sqrt(vhat) + eps)
            p.zero_grad()


def make_splits(labels: LabelAssignment, fractions=(0.1, 0.1),
                rng_seed: int = 0):
    """Stratified train/val/test masks: per class, floor(fraction * size)
    nodes (train gets at least 1), remainder to test."""
    f_train, f_val = fractions
    if f_train <= 0 or f_val < 0 or f_train + f_val >= 1:
        raise InputError(f"bad split fractions {fractions}")
    rng = np.random.default_rng(rng_seed)
    n = labels.n
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for c in range(labels.num_classes):
        idx = np.flatnonzero(labels.y == c)
        size = idx.size
        if size == 0:
            raise InputError(f"class {c} has no nodes; cannot stratify")
        n_tr = max(1, int(np.floor(f_train * size)))
        n_val = int(np.floor(f_val * size))
        idx = rng.permutation(idx)
        train[idx[:n_tr]] = True
        val[idx[n_tr:n_tr + n_val]] = True
        test[idx[n_tr + n_val:]] = True
    return train, val, test


def accuracy(probs: np.ndarray, labels: LabelAssignment, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return 0.0
    pred = np.argmax(probs[mask], axis=1)
    return float(np.mean(pred == labels.y[mask]))


def _check_masks(ds: LabeledDataset) -> None:
    if ds.train_mask is None or ds.val_mask is None or ds.test_mask is None:
        raise InputError("dataset is missing split masks; call with_masks first")
    if not ds.train_mask.any():
        raise InputError("empty training set")
    if not ds.val_mask.any():
        raise InputError("empty validation set")
    overlap = (ds.train_mask & ds.val_mask) | (ds.train_mask & ds.test_mask) \
        | (ds.val_mask & ds.test_mask)
    if overlap.any():
        raise InputError("split masks overlap")


def pretrain(est, ds: LabeledDataset, cfg: TrainConfig,
             rng: np.random.Generator) -> np.ndarray:
    """Warm up the prior estimator: cfg.pretrain_iters steps of summed masked
    CE plus lambda_p * L2 on its weights. Returns prior beliefs for all nodes."""
    _check_masks(ds)
    params = est.params
    state = AdamState(params)
    for it in range(cfg.pretrain_iters):
        try:
            with ad.Tape() as tape:
                probs = ad.row_softmax(est.forward(ds.features, training=True, rng=rng))
                loss = _prior_loss(probs, ds, params, cfg)
                tape.backward(loss)
        except InputError as exc:
            # non-finite values surface as tensor construction errors
            raise TrainingError(f"pretrain diverged at iteration {it}: {exc}") from exc
        state.step(params, cfg.learning_rate)
    probs = ad.row_softmax(est.forward(ds.features))
    return probs.value


def _sum_ce(probs: ad.Tensor, ds: LabeledDataset, mask) -> ad.Tensor:
    # the objective sums CE over training nodes (the regularizer carries no
    # per-node scaling, so a mean would shrink the data term against it)
    count = float(np.asarray(mask, dtype=bool).sum())
    return ad.scalar_mul(ad.masked_cross_entropy(probs, ds.labels, mask), count)


def _prior_loss(probs: ad.Tensor, ds: LabeledDataset, params,
                cfg: TrainConfig) -> ad.Tensor:
    loss = _sum_ce(probs, ds, ds.train_mask)
    if cfg.lambda_p > 0:
        loss = ad.add(loss, ad.scalar_mul(ad.l2_penalty(params), cfg.lambda_p))
    return loss


def cpgnn_forward(est, cp: CompatParam, ds: LabeledDataset,
                  prop_cfg: PropagationConfig, training: bool = False,
                  rng: np.random.Generator | None = None):
    """One full model pass; returns (prior beliefs, final beliefs)."""
    logits = est.forward(ds.features, training=training, rng=rng)
    bp = ad.row_softmax(logits)
    b0 = center_beliefs(bp)
    bf = final_beliefs(propagate(ds.graph, b0, cp, prop_cfg))
    return bp, bf


def joint_loss(bp: ad.Tensor, bf: ad.Tensor, ds: LabeledDataset,
               est_params, cp: CompatParam, cfg: TrainConfig):
    """Assemble the three-part loss; returns (loss, parts dict)."""
    ce_f = _sum_ce(bf, ds, ds.train_mask)
    loss = ce_f
    cotrain_val = 0.0
    if not cfg.no_cotrain and cfg.eta > 0:
        cot = ad.scalar_mul(_prior_loss(bp, ds, est_params, cfg), cfg.eta)
        cotrain_val = float(cot.value[0, 0])
        loss = ad.add(loss, cot)
    phi_val = 0.0
    if not cfg.no_hbar_reg:
        phi = ad.row_sum_abs_penalty(cp.hbar)
        phi_val = float(phi.value[0, 0])
        loss = ad.add(loss, phi)
    parts = {"ce_final": float(ce_f.value[0, 0]), "cotrain": cotrain_val,
             "phi": phi_val}
    return loss, parts


def train_full(ds: LabeledDataset, est_cfg: EstimatorConfig,
               prop_cfg: PropagationConfig, cfg: TrainConfig,
               true_compat: np.ndarray | None = None):
    """Full schedule: pretrain, initialize hbar, then joint optimization with
    early stopping on validation accuracy (best snapshot restored).

    Returns (CpgnnModel, TrainReport). When true_compat is given, the report
    tracks the compatibility estimation error per epoch.
    """
    _check_masks(ds)
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.rng_seed)
    g = ds.graph
    est = build_estimator(est_cfg, ds.feature_dim, ds.num_classes,
                          g if est_cfg.kind == "cheby" else None, rng)

    if cfg.no_pretrain or cfg.pretrain_iters == 0:
        bp0 = ad.row_softmax(est.forward(ds.features)).value
    else:
        bp0 = pretrain(est, ds, cfg, rng)

    if cfg.no_hbar_init:
        hb = glorot_init(ds.num_classes, ds.num_classes, rng)
        cp = CompatParam(hbar=hb, hbar0=hb.value.copy())
    else:
        cp = init_hbar(g, ds.labels, ds.train_mask, bp0)

    params = list(est.params) + [cp.hbar]
    state = AdamState(params)
    report = TrainReport()
    track_h = true_compat is not None

    best_val = -1.0
    best_epoch = -1
    best_snapshot = [p.value.copy() for p in params]
    since_best = 0

    for epoch in range(cfg.max_epochs):
        try:
            with ad.Tape() as tape:
                bp, bf = cpgnn_forward(est, cp, ds, prop_cfg, training=True, rng=rng)
                loss, parts = joint_loss(bp, bf, ds, est.params, cp, cfg)
                tape.backward(loss)
        except InputError as exc:
            raise TrainingError(f"joint training diverged at epoch {epoch}: {exc}") from exc

        if est_cfg.dropout > 0:
            _, bf_eval = cpgnn_forward(est, cp, ds, prop_cfg)
            probs = bf_eval.value
        else:
            probs = bf.value
        va = accuracy(probs, ds.labels, ds.val_mask)
        ta = accuracy(probs, ds.labels, ds.test_mask)

        report.total_loss.append(float(loss.value[0, 0]))
        report.ce_final.append(parts["ce_final"])
        report.cotrain.append(parts["cotrain"])
        report.phi.append(parts["phi"])
        report.val_acc.append(va)
        report.test_acc.append(ta)
        if track_h:
            report.delta_h.append(
                h_estimation_error(recover_h(cp), true_compat))

        if va > best_val:
            best_val = va
            best_epoch = epoch
            best_snapshot = [p.value.copy() for p in params]
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break

        state.step(params, cfg.learning_rate)

    for p, snap in zip(params, best_snapshot):
        p.value = snap
    report.best_epoch = best_epoch
    report.best_val_acc = best_val
    report.test_acc_at_best = report.test_acc[best_epoch] if best_epoch >= 0 else 0.0
    report.wall_clock_s = time.perf_counter() - started
    return CpgnnModel(estimator=est, cp=cp, prop_cfg=prop_cfg), report


def _sgc_params(in_dim: int, num_classes: int, rng: np.random.Generator):
    return [glorot_init(in_dim, num_classes, rng)]


def sgc_forward(g, x, theta: ad.Tensor) -> ad.Tensor:
    """softmax((A + I) X theta), the linear graph convolution used by the
    equivalence check."""
    if sp.issparse(x):
        xw = ad.spmm(x, theta)
    else:
        xw = ad.matmul(ad.constant(np.asarray(x, dtype=np.float64)), theta)
    return ad.row_softmax(ad.add(ad.spmm(g.adjacency, xw), xw))


def train_baseline(ds: LabeledDataset, kind: str, cfg: TrainConfig,
                   est_cfg: EstimatorConfig | None = None):
    """Train one of the built-in baselines ("mlp", "cheby", "sgc") with the
    same optimizer, loss shape, and early stopping as the full model.

    Returns (predict_probs callable, TrainReport).
    """
    _check_masks(ds)
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.rng_seed)
    if kind in ("mlp", "cheby"):
        base = est_cfg if est_cfg is not None else EstimatorConfig()
        e_cfg = EstimatorConfig(kind=kind, hidden_dims=base.hidden_dims,
                                cheby_order=base.cheby_order, dropout=base.dropout)
        est = build_estimator(e_cfg, ds.feature_dim, ds.num_classes,
                              ds.graph if kind == "cheby" else None, rng)
        params = est.params

        def forward(training=False):
            return ad.row_softmax(est.forward(ds.features, training=training, rng=rng))
    elif kind == "sgc":
        params = _sgc_params(ds.feature_dim, ds.num_classes, rng)

        def forward(training=False):
            return sgc_forward(ds.graph, ds.features, params[0])
    else:
        raise InputError(f"unknown baseline {kind!r}")

    state = AdamState(params)
    report = TrainReport()
    best_val = -1.0
    best_epoch = -1
    best_snapshot = [p.value.copy() for p in params]
    since_best = 0
    for epoch in range(cfg.max_epochs):
        try:
            with ad.Tape() as tape:
                probs = forward(training=True)
                loss = _prior_loss(probs, ds, params, cfg)
                tape.backward(loss)
        except InputError as exc:
            raise TrainingError(f"{kind} baseline diverged at epoch {epoch}: {exc}") from exc
        pv = probs.value
        va = accuracy(pv, ds.labels, ds.val_mask)
        ta = accuracy(pv, ds.labels, ds.test_mask)
        report.total_loss.append(float(loss.value[0, 0]))
        report.ce_final.append(float(loss.value[0, 0]))
        report.cotrain.append(0.0)
        report.phi.append(0.0)
        report.val_acc.append(va)
        report.test_acc.append(ta)
        if va > best_val:
            best_val = va
            best_epoch = epoch
            best_snapshot = [p.value.copy() for p in params]
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break
        state.step(params, cfg.learning_rate)

    for p, snap in zip(params, best_snapshot):
        p.value = snap
    report.best_epoch = best_epoch
    report.best_val_acc = best_val
    report.test_acc_at_best = report.test_acc[best_epoch] if best_epoch >= 0 else 0.0
    report.wall_clock_s = time.perf_counter() - started

    def predict() -> np.ndarray:
        return forward().value

    return predict, report
