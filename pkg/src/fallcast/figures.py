"""Matplotlib renderings of the report tables, written next to the CSV/JSON.

All figures are rendered with the Agg backend and fixed metadata so repeated
runs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .skeleton import GAIT_LABELS
from .transient import nearest_centroid

_SAVE = {"dpi": 110, "metadata": {"Software": "fallcast"}}
_CLASS_COLORS = {0: "#1f77b4", 1: "#ff7f0e", 2: "#d62728"}


def save_loss_curve(history: list[dict], path: str, title: str = "Training loss") -> None:
    epochs = [row["epoch"] for row in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [row["train_loss"] for row in history], label="train", color="#1f77b4")
    test = [row.get("test_loss", float("nan")) for row in history]
    if np.isfinite(test).any():
        ax.plot(epochs, test, label="test", color="#d62728")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def save_anticipation_error(report, path: str) -> None:
    """Mean anticipation error with a +/- one std band over the horizon axis."""
    seconds = [report.seconds(h) for h in report.horizons]
    mean = np.array([report.mean[h] for h in report.horizons])
    std = np.array([report.std[h] for h in report.horizons])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(seconds, mean, color="#d62728", marker="o", label="average")
    ax.fill_between(seconds, mean - std, mean + std, color="#d62728", alpha=0.2,
                    label="+/- 1 std")
    ax.set_xlabel("anticipation time [s]")
    ax.set_ylabel("normalized Euclidean distance")
    ax.set_title("Anticipation error over test sequences")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def save_accuracy(reports: list, path: str) -> None:
    """Per-horizon accuracy for one or more evaluation modes."""
    fig, ax = plt.subplots(figsize=(6, 4))
    styles = {"decoupled": ("#1f77b4", "o"), "dgnn_only": ("#7f7f7f", "s")}
    for report in reports:
        color, marker = styles.get(report.mode, ("#2ca02c", "^"))
        ms = [1000.0 * h / report.fps for h in report.horizons]
        acc = [report.accuracy[h] for h in report.horizons]
        ax.plot(ms, acc, color=color, marker=marker, label=report.mode)
    ax.set_xlabel("anticipation time [ms]")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Fall anticipation accuracy")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def save_transient_map(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray,
                       path: str, trajectory: np.ndarray | None = None,
                       anticipated: np.ndarray | None = None) -> None:
    """Projected clusters, centroids, nearest-centroid regions, trajectories.

    The shaded regions visualize the nearest-centroid rule only; they are not
    the classifier's decision boundary.
    """
    fig, ax = plt.subplots(figsize=(6.5, 5))

    pad = 0.1 * max(np.ptp(points[:, 0]), np.ptp(points[:, 1]), 1e-9)
    xs = np.linspace(points[:, 0].min() - pad, points[:, 0].max() + pad, 200)
    ys = np.linspace(points[:, 1].min() - pad, points[:, 1].max() + pad, 200)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    regions = nearest_centroid(grid, centroids).reshape(gx.shape)
    ax.contourf(gx, gy, regions, levels=[-0.5, 0.5, 1.5, 2.5],
                colors=[_CLASS_COLORS[c] for c in range(3)], alpha=0.12)

    for c in range(3):
        mask = labels == c
        if mask.any():
            ax.scatter(points[mask, 0], points[mask, 1], s=8, alpha=0.5,
                       color=_CLASS_COLORS[c], label=GAIT_LABELS[c])
        if np.all(np.isfinite(centroids[c])):
            ax.scatter(*centroids[c], marker="X", s=140, color=_CLASS_COLORS[c],
                       edgecolor="black", zorder=5)
    if trajectory is not None and len(trajectory):
        ax.plot(trajectory[:, 0], trajectory[:, 1], color="black", lw=1.2,
                marker=".", ms=4, label="observed trajectory")
    if anticipated is not None and len(anticipated):
        ax.plot(anticipated[:, 0], anticipated[:, 1], color="#17becf", lw=1.2,
                marker=".", ms=4, label="anticipated trajectory")
    ax.set_xlabel("principal axis 1")
    ax.set_ylabel("principal axis 2")
    ax.set_title("Transient map (regions: nearest-centroid rule)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
