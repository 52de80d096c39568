"""Figure rendering for experiment reports.

Every figure lands next to the delimited output as a PNG. The Agg backend is
forced so rendering works headless, and PNG date metadata is stripped so
reruns stay byte-stable.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_compat_heatmaps",
    "save_training_curves",
    "save_delta_h_curves",
    "save_accuracy_bars",
    "save_accuracy_vs_h",
]

_PNG_META = {"metadata": {"Date": None, "Software": None}}


def _finish(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120, **_PNG_META)
    plt.close(fig)


def save_compat_heatmaps(matrices: dict[str, np.ndarray], path: str) -> None:
    """Side-by-side heatmaps of named compatibility matrices."""
    names = list(matrices)
    fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names), 3.0),
                             squeeze=False)
    for ax, name in zip(axes[0], names):
        m = np.asarray(matrices[name])
        im = ax.imshow(m, cmap="viridis", vmin=0.0, vmax=max(1.0, m.max()))
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("to class")
        ax.set_ylabel("from class")
        fig.colorbar(im, ax=ax, fraction=0.046)
    _finish(fig, path)


def save_training_curves(curves: dict[str, list[float]], path: str,
                         title: str = "training") -> None:
    """Loss components and accuracies over epochs for a single run."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.0))
    for key in ("total_loss", "ce_final", "cotrain", "phi"):
        if key in curves and curves[key]:
            ax1.plot(curves[key], label=key, linewidth=1.0)
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax1.legend(fontsize=7)
    for key in ("val_acc", "test_acc"):
        if key in curves and curves[key]:
            ax2.plot(curves[key], label=key, linewidth=1.0)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("accuracy")
    ax2.set_ylim(0.0, 1.0)
    ax2.legend(fontsize=7)
    fig.suptitle(title, fontsize=10)
    _finish(fig, path)


def save_delta_h_curves(per_split: dict[int, list[float]], path: str) -> None:
    """Compatibility estimation error over epochs, one line per split."""
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    for split, curve in sorted(per_split.items()):
        ax.plot(curve, linewidth=1.0, label=f"split {split}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean abs compat error")
    ax.legend(fontsize=7)
    _finish(fig, path)


def save_accuracy_bars(summary: dict[str, tuple[float, float]], path: str) -> None:
    """Mean test accuracy with std error bars per method."""
    names = list(summary)
    means = [summary[m][0] for m in names]
    stds = [summary[m][1] for m in names]
    fig, ax = plt.subplots(figsize=(1.0 + 1.1 * len(names), 3.0))
    ax.bar(range(len(names)), means, yerr=stds, capsize=3, color="#4878d0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.0)
    _finish(fig, path)


def save_accuracy_vs_h(series: dict[str, list[tuple[float, float, float]]],
                       path: str) -> None:
    """Accuracy as a function of the target homophily level.

    series maps method name to (h, mean, std) triples.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for name, triples in series.items():
        triples = sorted(triples)
        hs = [t[0] for t in triples]
        means = [t[1] for t in triples]
        stds = [t[2] for t in triples]
        ax.errorbar(hs, means, yerr=stds, marker="o", markersize=3,
                    linewidth=1.0, capsize=2, label=name)
    ax.set_xlabel("target homophily h")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.legend(fontsize=7)
    _finish(fig, path)
