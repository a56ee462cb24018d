"""Skeleton data model: 12 keypoints, the directed bone tree, features.

Canonical keypoint order (fixed, embedded in the data format):

    0 left_shoulder   1 right_shoulder
    2 left_elbow      3 right_elbow
    4 left_wrist      5 right_wrist
    6 left_hip        7 right_hip
    8 left_knee       9 right_knee
   10 left_ankle     11 right_ankle

Node 12 is the virtual upper-body center (mean of shoulders and hips); it
roots the 12-edge bone tree and is the origin of the relative features.
Relative features are (x, y) offsets from that center divided by the torso
length (shoulder midpoint to hip midpoint), so they are dimensionless and
invariant to translation and uniform scaling of the camera frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegeneratePoseError, MissingAnchorError, WindowUnderflowError

KEYPOINT_NAMES = (
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
    "left_hip", "right_hip",
    "left_knee", "right_knee",
    "left_ankle", "right_ankle",
)
N_KEYPOINTS = 12
CENTER_NODE = 12          # virtual root appended after the 12 keypoints
N_NODES = 13
FEATURE_DIM = 2 * N_KEYPOINTS

LEFT_SHOULDER, RIGHT_SHOULDER = 0, 1
LEFT_HIP, RIGHT_HIP = 6, 7
_ANCHORS = (LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP)

GAIT_STABLE, GAIT_TRANSIENT, GAIT_FALL = 0, 1, 2
GAIT_LABELS = {GAIT_STABLE: "stable", GAIT_TRANSIENT: "transient", GAIT_FALL: "fall"}


@dataclass
class SkeletonFrame:
    """One video frame: 12 keypoints in pixels plus validity flags."""

    xy: np.ndarray               # (12, 2) float64
    valid: np.ndarray            # (12,) bool
    t: int = 0

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.xy.shape != (N_KEYPOINTS, 2):
            raise ValueError(f"frame needs (12, 2) keypoints, got {self.xy.shape}")
        if self.valid.shape != (N_KEYPOINTS,):
            raise ValueError(f"frame needs 12 validity flags, got {self.valid.shape}")
        if self.t < 0:
            raise ValueError("frame index must be non-negative")
        if np.any(~np.isfinite(self.xy[self.valid])):
            raise ValueError(f"frame {self.t}: valid keypoint with non-finite coordinates")


@dataclass
class LabeledSequence:
    """Time-ordered frames with optional per-frame gait labels."""

    xy: np.ndarray               # (T, 12, 2)
    valid: np.ndarray            # (T, 12) bool
    labels: Optional[np.ndarray] = None   # (T,) int in {0,1,2}, or None
    fps: float = 30.0
    name: str = ""

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.xy.ndim != 3 or self.xy.shape[1:] != (N_KEYPOINTS, 2):
            raise ValueError(f"sequence needs (T, 12, 2) keypoints, got {self.xy.shape}")
        if self.valid.shape != self.xy.shape[:2]:
            raise ValueError("validity flags do not match keypoint array")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self),):
                raise ValueError("labels do not match frame count")
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() > 2):
                raise ValueError("labels must be in {0, 1, 2}")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    def __len__(self) -> int:
        return self.xy.shape[0]

    def frame(self, t: int) -> SkeletonFrame:
        return SkeletonFrame(self.xy[t].copy(), self.valid[t].copy(), t)


@dataclass
class BoneGraph:
    """Directed bone tree over 13 nodes (12 keypoints + virtual center root)."""

    edges: tuple = ()
    source_incidence: np.ndarray = field(default=None, repr=False)
    target_incidence: np.ndarray = field(default=None, repr=False)

    @classmethod
    def default(cls) -> "BoneGraph":
        c = CENTER_NODE
        edges = (
            (c, 0), (c, 1),          # center -> shoulders
            (c, 6), (c, 7),          # center -> hips
            (0, 2), (2, 4),          # left arm
            (1, 3), (3, 5),          # right arm
            (6, 8), (8, 10),         # left leg
            (7, 9), (9, 11),         # right leg
        )
        a_s = np.zeros((N_NODES, len(edges)))
        a_t = np.zeros((N_NODES, len(edges)))
        for j, (src, tgt) in enumerate(edges):
            a_s[src, j] = 1.0
            a_t[tgt, j] = 1.0
        return cls(edges=edges, source_incidence=a_s, target_incidence=a_t)

    def __post_init__(self):
        if not self.edges:
            return
        if len(self.edges) != N_KEYPOINTS:
            raise ValueError(f"bone graph needs 12 edges, got {len(self.edges)}")
        parents = {}
        for src, tgt in self.edges:
            if tgt in parents:
                raise ValueError(f"node {tgt} has two parents")
            parents[tgt] = src
        if CENTER_NODE in parents:
            raise ValueError("virtual center must be the root")
        if sorted(parents) != list(range(N_KEYPOINTS)):
            raise ValueError("every keypoint needs exactly one parent")


def upper_body_center(frame: SkeletonFrame) -> np.ndarray:
    """Mean of the two shoulders and two hips."""
    bad = [KEYPOINT_NAMES[i] for i in _ANCHORS if not frame.valid[i]]
    if bad:
        raise MissingAnchorError(
            f"frame {frame.t}: cannot place body center, invalid keypoints: {', '.join(bad)}")
    return frame.xy[list(_ANCHORS)].mean(axis=0)


def torso_length(xy: np.ndarray) -> float:
    """Distance from shoulder midpoint to hip midpoint for a (12, 2) pose."""
    shoulders = 0.5 * (xy[LEFT_SHOULDER] + xy[RIGHT_SHOULDER])
    hips = 0.5 * (xy[LEFT_HIP] + xy[RIGHT_HIP])
    return float(np.hypot(*(shoulders - hips)))


def to_relative(frame: SkeletonFrame) -> np.ndarray:
    """Center-relative, torso-normalized features, flat (24,) [x0,y0,x1,y1,...]."""
    if not frame.valid.all():
        bad = [KEYPOINT_NAMES[i] for i in range(N_KEYPOINTS) if not frame.valid[i]]
        raise MissingAnchorError(
            f"frame {frame.t}: relative features need all keypoints, invalid: {', '.join(bad)}")
    center = upper_body_center(frame)
    length = torso_length(frame.xy)
    if length == 0.0:
        raise DegeneratePoseError(f"frame {frame.t}: torso length is zero")
    return ((frame.xy - center) / length).reshape(-1)


def relative_series(seq: LabeledSequence) -> np.ndarray:
    """Vectorized to_relative over a gap-free sequence -> (T, 24)."""
    if not seq.valid.all():
        t, k = np.argwhere(~seq.valid)[0]
        raise MissingAnchorError(
            f"sequence {seq.name!r}: frame {t} keypoint {KEYPOINT_NAMES[k]} invalid; preprocess first")
    shoulders = 0.5 * (seq.xy[:, LEFT_SHOULDER] + seq.xy[:, RIGHT_SHOULDER])
    hips = 0.5 * (seq.xy[:, LEFT_HIP] + seq.xy[:, RIGHT_HIP])
    center = 0.5 * (shoulders + hips)
    length = np.hypot(*(shoulders - hips).T)
    if np.any(length == 0.0):
        t = int(np.nonzero(length == 0.0)[0][0])
        raise DegeneratePoseError(f"sequence {seq.name!r}: torso length zero at frame {t}")
    rel = (seq.xy - center[:, None, :]) / length[:, None, None]
    return rel.reshape(len(seq), FEATURE_DIM)


def bone_features(rel: np.ndarray, graph: BoneGraph) -> np.ndarray:
    """Per-edge offset vectors (target - source), virtual root at the origin.

    ``rel`` is a flat (24,) relative-feature vector or a (T, 24) block; the
    result is (12, 2) or (T, 12, 2) in the graph's edge order.
    """
    flat = rel.ndim == 1
    r = rel[None, :] if flat else rel
    pts = np.concatenate([r.reshape(r.shape[0], N_KEYPOINTS, 2),
                          np.zeros((r.shape[0], 1, 2))], axis=1)
    src = np.array([e[0] for e in graph.edges])
    tgt = np.array([e[1] for e in graph.edges])
    bones = pts[:, tgt] - pts[:, src]
    return bones[0] if flat else bones


def window(features: np.ndarray, t: int, size: int = 15) -> np.ndarray:
    """Frames t-size+1 .. t of a (T, D) feature series as a (size, D) block."""
    features = np.asarray(features)
    if t >= features.shape[0]:
        raise WindowUnderflowError(f"end index {t} beyond series of length {features.shape[0]}")
    if t < size - 1:
        raise WindowUnderflowError(
            f"window of size {size} ending at frame {t} needs {size - 1 - t} more frames of history")
    return features[t - size + 1:t + 1]
