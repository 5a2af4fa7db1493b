"""Figure rendering for reports: training curves, confusion matrices, fold
accuracies, score distributions, and quality scatter plots.

Uses the non-interactive backend and writes PNG files next to the CSVs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classifier import CrossValidationResult
from .metrics import ConfusionMatrix
from .nn import EpochStats


def training_history_figure(history: list[EpochStats], path) -> str:
    epochs = [h.epoch for h in history]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, [h.train_loss for h in history], label="train loss")
    ax.plot(epochs, [h.val_loss for h in history], label="validation loss")
    if history and history[0].val_accuracy is not None:
        twin = ax.twinx()
        twin.plot(epochs, [h.val_accuracy for h in history], color="tab:green",
                  linestyle="--", label="validation accuracy")
        twin.set_ylabel("accuracy")
        twin.set_ylim(0, 1.05)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def confusion_matrix_figure(matrix: ConfusionMatrix, names, path) -> str:
    counts = matrix.counts
    fig, ax = plt.subplots(figsize=(6, 5.5))
    im = ax.imshow(counts, cmap="Blues")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ticks = np.arange(matrix.k)
    ax.set_xticks(ticks, labels=names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(ticks, labels=names, fontsize=8)
    if matrix.k <= 12:
        for i in range(matrix.k):
            for j in range(matrix.k):
                ax.text(j, i, str(counts[i, j]), ha="center", va="center",
                        color="white" if counts[i, j] > counts.max() / 2 else "black",
                        fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def fold_accuracy_figure(cv: CrossValidationResult, path) -> str:
    accs = cv.accuracies
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(np.arange(len(accs)), accs, color="tab:blue")
    ax.axhline(cv.mean_accuracy, color="tab:red", linestyle="--",
               label=f"mean {cv.mean_accuracy:.4f}")
    ax.set_xlabel("fold")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def score_histogram_figure(scores, threshold: float | None, path) -> str:
    scores = np.asarray(scores, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(scores, bins=min(40, max(10, scores.size // 8)), color="tab:blue",
            edgecolor="white")
    if threshold is not None:
        ax.axvline(threshold, color="tab:red", linestyle="--",
                   label=f"threshold {threshold:.4f}")
        ax.legend()
    ax.set_xlabel("quality score")
    ax.set_ylabel("images")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def quality_scatter_figure(predicted, target, path) -> str:
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    ax.scatter(target, predicted, s=14, alpha=0.6)
    ax.plot([0, 1], [0, 1], color="tab:gray", linestyle=":")
    ax.set_xlabel("target score")
    ax.set_ylabel("predicted score")
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
