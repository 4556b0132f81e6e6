"""Matplotlib renderings of evaluation results, written to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import ConfusionMatrix  # noqa: E402
from .extract import MALICIOUS, NORMAL  # noqa: E402


def plot_roc(points, path, auc=None) -> None:
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    fig, ax = plt.subplots(figsize=(5, 5))
    label = "ROC" if auc is None else f"ROC (AUC = {auc:.3f})"
    ax.plot(xs, ys, marker="o", color="tab:blue", label=label)
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=1)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_confusion(matrix: ConfusionMatrix, path) -> None:
    grid = [[matrix.nn, matrix.nm], [matrix.mn, matrix.mm]]
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(grid, cmap="Blues")
    ax.set_xticks([0, 1], [NORMAL, MALICIOUS])
    ax.set_yticks([0, 1], [NORMAL, MALICIOUS])
    ax.set_xlabel("Predicted class")
    ax.set_ylabel("True class")
    vmax = max(max(row) for row in grid) or 1
    for r in range(2):
        for c in range(2):
            color = "white" if grid[r][c] > vmax / 2 else "black"
            ax.text(c, r, str(grid[r][c]), ha="center", va="center", color=color)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
