"""PCA projection of window features onto a 2-D plane for transition analysis.

Flattened 15x24 feature windows (what the classifier consumes) are projected
onto the top two principal axes; per-class centroids and per-step trajectory
dynamics (distance to each centroid, speed, heading) quantify how a sequence
moves between the stable, transient, and fall clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .skeleton import GAIT_LABELS

N_CLASSES = 3


@dataclass
class TransientMap:
    """Fitted 2-D PCA basis plus per-class centroids."""

    mean: np.ndarray                 # (d,)
    axes: np.ndarray                 # (2, d), orthonormal rows
    explained_variance: np.ndarray   # (2,), descending
    centroids: np.ndarray | None = None   # (3, 2); rows NaN when class absent

    def to_dict(self) -> dict:
        d = {"mean": self.mean.tolist(), "axes": self.axes.tolist(),
             "explained_variance": self.explained_variance.tolist()}
        if self.centroids is not None:
            d["centroids"] = self.centroids.tolist()
        return d


def fit_pca(rows: np.ndarray) -> TransientMap:
    """Top-2 eigenvectors of the mean-centered covariance of (N, d) rows.

    Sign convention: the largest-magnitude component of each axis is made
    positive, so the fit is deterministic for a fixed input order.
    """
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError(f"fit_pca expects (N, d>=2) rows, got {x.shape}")
    if x.shape[0] < 3:
        raise InsufficientDataError(f"fit_pca needs at least 3 rows, got {x.shape[0]}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1][:2]
    axes = vectors[:, order].T
    for i in range(2):
        peak = np.argmax(np.abs(axes[i]))
        if axes[i, peak] < 0:
            axes[i] = -axes[i]
    explained = np.maximum(values[order], 0.0)
    return TransientMap(mean=mean, axes=np.ascontiguousarray(axes),
                        explained_variance=explained)


def project(tmap: TransientMap, rows: np.ndarray) -> np.ndarray:
    """(d,) or (N, d) feature rows -> (2,) or (N, 2) plane coordinates."""
    x = np.asarray(rows, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None]
    if x.shape[1] != tmap.mean.shape[0]:
        raise ValueError(f"dimension mismatch: rows have {x.shape[1]}, map has {tmap.mean.shape[0]}")
    uv = (x - tmap.mean) @ tmap.axes.T
    return uv[0] if single else uv


def class_centroids(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-class means of projected points; absent classes get NaN rows."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    centroids = np.full((N_CLASSES, 2), np.nan)
    for c in range(N_CLASSES):
        mask = labels == c
        if mask.any():
            centroids[c] = points[mask].mean(axis=0)
    return centroids


def nearest_centroid(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Label each point by its closest (present) centroid."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dist = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
    dist = np.where(np.isnan(dist), np.inf, dist)
    return dist.argmin(axis=1)


@dataclass
class TrajectoryMetrics:
    """Per-step dynamics of a projected trajectory.

    ``speed`` and ``heading`` describe the step arriving at each point, so
    their first entry is NaN (and every entry is NaN for a single point).
    """

    centroid_distance: np.ndarray   # (T, 3)
    speed: np.ndarray               # (T,)
    heading: np.ndarray             # (T,) radians

    def to_dict(self) -> dict:
        return {"centroid_distance": {GAIT_LABELS[c]: self.centroid_distance[:, c].tolist()
                                      for c in range(N_CLASSES)},
                "speed": self.speed.tolist(),
                "heading": self.heading.tolist()}


def trajectory_metrics(points: np.ndarray, centroids: np.ndarray) -> TrajectoryMetrics:
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    t = points.shape[0]
    dist = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
    speed = np.full(t, np.nan)
    heading = np.full(t, np.nan)
    if t >= 2:
        steps = np.diff(points, axis=0)
        speed[1:] = np.hypot(steps[:, 0], steps[:, 1])
        heading[1:] = np.arctan2(steps[:, 1], steps[:, 0])
    return TrajectoryMetrics(centroid_distance=dist, speed=speed, heading=heading)
