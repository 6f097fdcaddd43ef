"""Matplotlib rendering for evaluation reports.

Figures are written next to the delimited report files.  Output is kept
byte-deterministic: fixed figure geometry, fixed dpi, and pinned PNG
metadata (no timestamps).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConfusionMatrix, EvalReport
from .rules import CLASS_ORDER

_PNG_META = {"Software": "mddpheno"}
_CLASS_SHORT = [label.value for label in CLASS_ORDER]


def save_f1_bars(reports: list[EvalReport], path) -> None:
    """Grouped bar chart of per-class F1, one group per class."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    n_models = len(reports)
    x = np.arange(len(CLASS_ORDER))
    width = 0.8 / max(n_models, 1)
    for i, report in enumerate(reports):
        f1s = [report.per_class[label].f1 for label in CLASS_ORDER]
        ax.bar(x + (i - (n_models - 1) / 2) * width, f1s, width, label=report.model)
    ax.set_xticks(x)
    ax.set_xticklabels(_CLASS_SHORT)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("F1 score")
    ax.set_title("Per-class F1 by model")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def save_confusion_heatmap(matrix: ConfusionMatrix, model: str, path) -> None:
    """Annotated heatmap of one model's 4x4 confusion matrix."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    counts = matrix.counts
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(4))
    ax.set_yticks(range(4))
    ax.set_xticklabels(_CLASS_SHORT, rotation=30, ha="right")
    ax.set_yticklabels(_CLASS_SHORT)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(f"Confusion matrix: {model}")
    threshold = counts.max() / 2 if counts.max() else 0
    for r in range(4):
        for c in range(4):
            ax.text(
                c,
                r,
                str(int(counts[r, c])),
                ha="center",
                va="center",
                fontsize=9,
                color="white" if counts[r, c] > threshold else "black",
            )
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
