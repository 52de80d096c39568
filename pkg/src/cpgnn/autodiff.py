"""Minimal reverse-mode differentiation over dense float64 matrices.

Values are 2-D numpy arrays (scalars are 1x1). Ops execute eagerly and append
a record to the thread-local active Tape; Tape.backward replays the records in
reverse, accumulating gradients additively into Tensor.grad. Sparse matrices
appear only as constant left factors in :func:`spmm`.
"""
from __future__ import annotations

import threading

import numpy as np
import scipy.sparse as sp

from .errors import InputError, ShapeError

__all__ = [
    "Tensor",
    "Tape",
    "constant",
    "parameter",
    "matmul",
    "spmm",
    "add",
    "sub",
    "scalar_mul",
    "hadamard",
    "transpose",
    "relu",
    "row_softmax",
    "broadcast_sub_scalar",
    "dropout",
    "masked_cross_entropy",
    "l2_penalty",
    "row_sum_abs_penalty",
    "finite_diff_check",
]

PROB_FLOOR = 1e-12

_active = threading.local()


class Tensor:
    """A 2-D float64 value with an optional gradient accumulator."""

    __slots__ = ("value", "requires_grad", "grad", "_tracked")

    def __init__(self, value, requires_grad: bool = False):
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"tensors are 2-D; got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("tensor holds non-finite values")
        self.value = arr
        self.requires_grad = requires_grad
        self.grad = None
        self._tracked = requires_grad  # True once on a tape path that needs grads

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


def constant(value) -> Tensor:
    return Tensor(value, requires_grad=False)


def parameter(value) -> Tensor:
    return Tensor(value, requires_grad=True)


class Tape:
    """Ordered op record; backward traverses it in exact reverse order."""

    def __init__(self):
        self._records = []  # (output, inputs, backward_fn)

    def __enter__(self):
        if getattr(_active, "tape", None) is not None:
            raise InputError("a Tape is already active on this thread")
        _active.tape = self
        return self

    def __exit__(self, exc_type, exc, tb):
        _active.tape = None
        return False

    def _record(self, out: Tensor, inputs, backward):
        self._records.append((out, inputs, backward))

    def backward(self, loss: Tensor):
        """Accumulate d(loss)/d(tensor) into .grad for every tracked tensor."""
        if loss.value.shape != (1, 1):
            raise ShapeError("backward: loss must be scalar", loss.value.shape)
        loss._accumulate(np.ones((1, 1)))
        for out, inputs, backward_fn in reversed(self._records):
            if out.grad is None:
                continue
            for t, g in zip(inputs, backward_fn(out.grad)):
                if t._tracked and g is not None:
                    t._accumulate(g)


def _tape() -> Tape | None:
    return getattr(_active, "tape", None)


def _emit(out: Tensor, inputs, backward) -> Tensor:
    tape = _tape()
    if tape is not None and any(t._tracked for t in inputs):
        out._tracked = True
        tape._record(out, inputs, backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError("matmul", a.value.shape, b.value.shape)
    out = Tensor(a.value @ b.value)
    av, bv = a.value, b.value
    na, nb = a._tracked, b._tracked

    def backward(g):
        return (g @ bv.T if na else None, av.T @ g if nb else None)

    return _emit(out, (a, b), backward)


def spmm(s, b: Tensor) -> Tensor:
    """Sparse constant times dense tensor; only b receives gradient."""
    if not sp.issparse(s):
        raise InputError("spmm left operand must be a scipy sparse matrix")
    if s.shape[1] != b.value.shape[0]:
        raise ShapeError("spmm", s.shape, b.value.shape)
    out = Tensor(np.asarray(s @ b.value))
    st = s.T.tocsr()

    def backward(g):
        return (np.asarray(st @ g),)

    return _emit(out, (b,), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise ShapeError("add", a.value.shape, b.value.shape)
    out = Tensor(a.value + b.value)
    na, nb = a._tracked, b._tracked

    def backward(g):
        return (g if na else None, g if nb else None)

    return _emit(out, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise ShapeError("sub", a.value.shape, b.value.shape)
    out = Tensor(a.value - b.value)
    na, nb = a._tracked, b._tracked

    def backward(g):
        return (g if na else None, -g if nb else None)

    return _emit(out, (a, b), backward)


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(a.value * c)

    def backward(g):
        return (g * c,)

    return _emit(out, (a,), backward)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise ShapeError("hadamard", a.value.shape, b.value.shape)
    out = Tensor(a.value * b.value)
    av, bv = a.value, b.value
    na, nb = a._tracked, b._tracked

    def backward(g):
        return (g * bv if na else None, g * av if nb else None)

    return _emit(out, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.value.T.copy())

    def backward(g):
        return (g.T,)

    return _emit(out, (a,), backward)


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.value, 0.0))
    mask = a.value > 0  # subgradient 0 at exactly 0

    def backward(g):
        return (g * mask,)

    return _emit(out, (a,), backward)


def row_softmax(a: Tensor) -> Tensor:
    z = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    out = Tensor(p)

    def backward(g):
        return (p * (g - (g * p).sum(axis=1, keepdims=True)),)

    return _emit(out, (a,), backward)


def broadcast_sub_scalar(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.value - float(c))

    def backward(g):
        return (g,)

    return _emit(out, (a,), backward)


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when rate == 0."""
    if not 0.0 <= rate < 1.0:
        raise InputError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return a
    keep = (rng.random(a.value.shape) >= rate) / (1.0 - rate)
    out = Tensor(a.value * keep)

    def backward(g):
        return (g * keep,)

    return _emit(out, (a,), backward)


def masked_cross_entropy(probs: Tensor, labels, mask) -> Tensor:
    """Mean of -log probs[v, y_v] over the masked nodes.

    Probabilities are floored at 1e-12 inside the log; the floor also zeroes
    the gradient there.
    """
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise InputError("masked_cross_entropy: empty node mask")
    y = np.asarray(labels.y if hasattr(labels, "y") else labels, dtype=np.int64)
    if y.shape[0] != probs.value.shape[0] or mask.shape[0] != probs.value.shape[0]:
        raise ShapeError("masked_cross_entropy", probs.value.shape, y.shape, mask.shape)
    picked = probs.value[idx, y[idx]]
    clamped = np.maximum(picked, PROB_FLOOR)
    out = Tensor([[float(np.mean(-np.log(clamped)))]])
    above = picked > PROB_FLOOR
    shape = probs.value.shape

    def backward(g):
        gp = np.zeros(shape)
        gp[idx, y[idx]] = np.where(above, -1.0 / clamped, 0.0) * (g[0, 0] / idx.size)
        return (gp,)

    return _emit(out, (probs,), backward)


def l2_penalty(params) -> Tensor:
    """Sum of squared entries over a list of tensors (squared Frobenius norm)."""
    params = list(params)
    out = Tensor([[sum(float((p.value ** 2).sum()) for p in params)]])
    values = [p.value for p in params]
    needs = [p._tracked for p in params]

    def backward(g):
        return tuple(2.0 * v * g[0, 0] if n else None for v, n in zip(values, needs))

    return _emit(out, tuple(params), backward)


def row_sum_abs_penalty(hbar: Tensor) -> Tensor:
    """Sum over rows of |row sum|; subgradient is 0 at exactly-zero row sums."""
    if hbar.value.shape[0] != hbar.value.shape[1]:
        raise ShapeError("row_sum_abs_penalty: square tensor required", hbar.value.shape)
    row_sums = hbar.value.sum(axis=1)
    out = Tensor([[float(np.abs(row_sums).sum())]])
    signs = np.sign(row_sums)
    cols = hbar.value.shape[1]

    def backward(g):
        return (np.repeat((signs * g[0, 0])[:, None], cols, axis=1),)

    return _emit(out, (hbar,), backward)


def finite_diff_check(loss_fn, params, eps: float = 1e-5, abs_floor: float = 1e-7) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn must be a deterministic zero-arg callable that rebuilds the forward
    pass from the params' current values and returns a scalar Tensor.
    Differences below abs_floor count as zero error.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        tape.backward(loss_fn())
    analytic = [np.zeros_like(p.value) if p.grad is None else p.grad.copy() for p in params]
    for p in params:
        p.zero_grad()

    def eval_loss() -> float:
        # no active tape: forward values only
        return float(loss_fn().value[0, 0])

    worst = 0.0
    for p, g in zip(params, analytic):
        gflat = g.reshape(-1)
        for i in range(p.value.size):
            orig = p.value.flat[i]
            p.value.flat[i] = orig + eps
            up = eval_loss()
            p.value.flat[i] = orig - eps
            down = eval_loss()
            p.value.flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            diff = abs(numeric - gflat[i])
            if diff < abs_floor:
                continue
            worst = max(worst, diff / max(abs(numeric), abs(gflat[i])))
    return worst
