"""Directed graph network over joints and bones for gait-state classification.

Each block updates vertices from [own features, incoming-edge aggregate,
outgoing-edge aggregate] and then edges from [own features, updated source,
updated target], with the aggregates routed through trainable copies of the
source/target incidence matrices.  A depthwise temporal convolution follows
every block.  Channel widths run 12 -> 16 -> 32 -> 64 after a 2 -> 12 input
embedding; pooled vertex and edge streams concatenate into the 128-wide
classifier head over {stable, transient, fall}.

The trainable incidence matrices start as the bone tree's 0/1 incidence, row
scaled to make the initial node aggregates means over incident edges; training
is free to move them ("adaptive adjacency") unless the graph is frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import tensorlib as tl
from .errors import TrainingDivergedError
from .optim import AdamState, LrSchedule, ParamStore, adam_step, load_checkpoint, save_checkpoint
from .skeleton import (BoneGraph, FEATURE_DIM, GAIT_LABELS, LabeledSequence, N_KEYPOINTS,
                       N_NODES, SkeletonFrame, bone_features, relative_series, to_relative)
from .tensorlib import Tensor

WINDOW = 15
N_CLASSES = 3
CHANNEL_LADDER = ((12, 16), (16, 32), (32, 64))
BASELINE_OFFSETS = (0, 3, 6, 9, 12, 15)


@dataclass
class ClassifierTrainConfig:
    window: int = WINDOW
    offset: int = 0                  # label time-offset; 0 for the decoupled pipeline
    batch_size: int = 32
    epochs: int = 300
    schedule: LrSchedule = field(default_factory=LrSchedule)
    seed: int = 0
    freeze_graph: bool = False
    window_stride: int = 1

    def __post_init__(self):
        if self.window != WINDOW:
            raise ValueError(f"window size is fixed at {WINDOW}")
        if self.offset < 0:
            raise ValueError("label offset must be non-negative")
        if self.batch_size < 1 or self.epochs < 1 or self.window_stride < 1:
            raise ValueError("batch size, epochs and stride must be positive")


def graph_features(windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feature windows (B, 15, 24) -> vertex (B, 2, 13, T), edge (B, 2, 12, T)."""
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 2:
        w = w[None]
    b, t, d = w.shape
    if d != FEATURE_DIM:
        raise ValueError(f"expected feature width {FEATURE_DIM}, got {d}")
    pts = w.reshape(b, t, N_KEYPOINTS, 2)
    verts = np.zeros((b, 2, N_NODES, t))
    verts[:, :, :N_KEYPOINTS, :] = pts.transpose(0, 3, 2, 1)
    graph = BoneGraph.default()
    bones = bone_features(w.reshape(b * t, d), graph).reshape(b, t, N_KEYPOINTS, 2)
    edges = bones.transpose(0, 3, 2, 1)
    return verts, np.ascontiguousarray(edges)


def _normalized_incidence(a: np.ndarray) -> np.ndarray:
    counts = a.sum(axis=1, keepdims=True)
    return a / np.maximum(counts, 1.0)


class DgnnModel:
    """Three-block directed graph network with a 3-class softmax head."""

    def __init__(self, channels=CHANNEL_LADDER, embed_channels: int = 12,
                 temporal_kernel: int = 5, dropout: float = 0.5,
                 freeze_graph: bool = False, seed: int = 0):
        if channels[0][0] != embed_channels:
            raise ValueError("first block must consume the embedding width")
        for (_, c_out), (c_in, _) in zip(channels, channels[1:]):
            if c_out != c_in:
                raise ValueError(f"channel ladder does not chain: {channels}")
        self.channels = tuple(tuple(c) for c in channels)
        self.embed_channels = embed_channels
        self.temporal_kernel = temporal_kernel
        self.dropout = dropout
        self.freeze_graph = freeze_graph
        self.params = ParamStore()

        rng = np.random.default_rng(seed)
        graph = BoneGraph.default()
        a_s0 = _normalized_incidence(graph.source_incidence)
        a_t0 = _normalized_incidence(graph.target_incidence)

        self.params.add("embed_v.w", tl.xavier_init(2, embed_channels, rng))
        self.params.add("embed_v.b", np.zeros(embed_channels))
        self.params.add("embed_e.w", tl.xavier_init(2, embed_channels, rng))
        self.params.add("embed_e.b", np.zeros(embed_channels))
        for i, (c_in, c_out) in enumerate(self.channels):
            self.params.add(f"block{i}.a_s", a_s0.copy())
            self.params.add(f"block{i}.a_t", a_t0.copy())
            self.params.add(f"block{i}.w_v", tl.xavier_init(3 * c_in, c_out, rng))
            self.params.add(f"block{i}.b_v", np.zeros(c_out))
            self.params.add(f"block{i}.w_e", tl.xavier_init(c_in + 2 * c_out, c_out, rng))
            self.params.add(f"block{i}.b_e", np.zeros(c_out))
            self.params.add(f"block{i}.tcn_v.k", tl.xavier_init(temporal_kernel, c_out, rng))
            self.params.add(f"block{i}.tcn_v.b", np.zeros(c_out))
            self.params.add(f"block{i}.tcn_e.k", tl.xavier_init(temporal_kernel, c_out, rng))
            self.params.add(f"block{i}.tcn_e.b", np.zeros(c_out))
        head_in = 2 * self.channels[-1][1]
        self.params.add("head.w", tl.xavier_init(head_in, N_CLASSES, rng))
        self.params.add("head.b", np.zeros(N_CLASSES))
        if freeze_graph:
            self._set_graph_trainable(False)

    def _set_graph_trainable(self, trainable: bool):
        for i in range(len(self.channels)):
            self.params[f"block{i}.a_s"].requires_grad = trainable
            self.params[f"block{i}.a_t"].requires_grad = trainable

    def block_forward(self, index: int, xv: Tensor, xe: Tensor) -> tuple[Tensor, Tensor]:
        """One graph block: vertex update from incident-edge aggregates, then
        edge update from the refreshed endpoint vertices."""
        p = self.params
        a_s, a_t = p[f"block{index}.a_s"], p[f"block{index}.a_t"]
        incoming = tl.nodes_from_edges(a_t, xe)
        outgoing = tl.nodes_from_edges(a_s, xe)
        hv = tl.relu(tl.channel_linear(
            p[f"block{index}.w_v"], p[f"block{index}.b_v"],
            tl.concat([xv, incoming, outgoing], axis=1)))
        src = tl.edges_from_nodes(a_s, hv)
        tgt = tl.edges_from_nodes(a_t, hv)
        he = tl.relu(tl.channel_linear(
            p[f"block{index}.w_e"], p[f"block{index}.b_e"],
            tl.concat([xe, src, tgt], axis=1)))
        return hv, he

    def forward(self, verts: np.ndarray, edges: np.ndarray,
                training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Graph features -> logits (B, 3); records the graph when training."""
        p = self.params
        xv = tl.channel_linear(p["embed_v.w"], p["embed_v.b"], Tensor(verts))
        xe = tl.channel_linear(p["embed_e.w"], p["embed_e.b"], Tensor(edges))
        for i in range(len(self.channels)):
            hv, he = self.block_forward(i, xv, xe)
            xv = tl.relu(tl.temporal_depthwise_conv(
                p[f"block{i}.tcn_v.k"], p[f"block{i}.tcn_v.b"], hv))
            xe = tl.relu(tl.temporal_depthwise_conv(
                p[f"block{i}.tcn_e.k"], p[f"block{i}.tcn_e.b"], he))
        pooled = tl.concat([tl.mean_pool_graph(xv), tl.mean_pool_graph(xe)], axis=1)
        if training:
            pooled = tl.dropout(pooled, self.dropout, rng)
        return tl.linear(pooled, p["head.w"], p["head.b"])

    def predict_proba(self, windows: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Feature windows (B, 15, 24) -> class probabilities (B, 3)."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None]
        if not np.all(np.isfinite(windows)):
            raise ValueError("window contains non-finite values")
        out = np.empty((len(windows), N_CLASSES))
        with tl.no_grad():
            for start in range(0, len(windows), batch_size):
                chunk = windows[start:start + batch_size]
                verts, edges = graph_features(chunk)
                logits = self.forward(verts, edges, training=False)
                out[start:start + len(chunk)] = tl.softmax(logits.data, axis=1)
        return out

    def config(self) -> dict:
        return {"channels": [list(c) for c in self.channels],
                "embed_channels": self.embed_channels,
                "temporal_kernel": self.temporal_kernel,
                "dropout": self.dropout,
                "freeze_graph": self.freeze_graph}

    def save(self, path: str) -> None:
        save_checkpoint(path, "classifier", self.config(), self.params.arrays())

    @classmethod
    def load(cls, path: str) -> "DgnnModel":
        kind, config, arrays = load_checkpoint(path)
        if kind != "classifier":
            raise ValueError(f"{path}: checkpoint kind {kind!r}, expected 'classifier'")
        model = cls(**config)
        model.params.load_arrays(arrays)
        return model


def classify_features(model: DgnnModel, rel_window: np.ndarray) -> np.ndarray:
    """One (15, 24) relative-feature window -> probabilities over the 3 states."""
    rel_window = np.asarray(rel_window)
    if rel_window.shape != (WINDOW, FEATURE_DIM):
        raise ValueError(f"expected ({WINDOW}, {FEATURE_DIM}) window, got {rel_window.shape}")
    return model.predict_proba(rel_window[None])[0]


def classify_window(model: DgnnModel, frames: list[SkeletonFrame]) -> np.ndarray:
    """Fifteen preprocessed frames -> probabilities over the 3 states."""
    if len(frames) != WINDOW:
        raise ValueError(f"expected {WINDOW} frames, got {len(frames)}")
    rel = np.stack([to_relative(f) for f in frames])
    return classify_features(model, rel)


def build_labeled_windows(sequences: list[LabeledSequence], offset: int,
                          stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Windows ending at t paired with the label at t + offset.

    Windows whose shifted label falls beyond the sequence are dropped.
    """
    wins, labels = [], []
    for seq in sequences:
        if seq.labels is None:
            raise ValueError(f"sequence {seq.name!r} has no labels")
        rel = relative_series(seq)
        for t in range(WINDOW - 1, len(rel) - offset, stride):
            wins.append(rel[t - WINDOW + 1:t + 1])
            labels.append(seq.labels[t + offset])
    if not wins:
        raise ValueError("no training windows after applying the label offset")
    return np.array(wins), np.array(labels, dtype=np.int64)


def train_classifier(train_seqs: list[LabeledSequence],
                     config: ClassifierTrainConfig,
                     log=None) -> tuple[DgnnModel, dict]:
    """Train the gait classifier; returns the model and training metrics."""
    if not train_seqs:
        raise ValueError("empty training dataset")
    windows, labels = build_labeled_windows(train_seqs, config.offset, config.window_stride)

    metrics: dict = {"offset": config.offset, "warnings": []}
    present = np.unique(labels)
    absent = sorted(set(range(N_CLASSES)) - set(present.tolist()))
    if absent:
        names = ", ".join(GAIT_LABELS[a] for a in absent)
        metrics["warnings"].append(f"degenerate labels: classes absent from training set: {names}")

    model = DgnnModel(freeze_graph=config.freeze_graph, seed=config.seed)
    rng = np.random.default_rng(config.seed + 1)
    state = AdamState()
    history = []
    for epoch in range(config.epochs):
        state.lr = config.schedule.rate(epoch)
        order = rng.permutation(len(windows))
        total, batches = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            verts, edges = graph_features(windows[idx])
            logits = model.forward(verts, edges, training=True, rng=rng)
            loss = tl.cross_entropy(logits, labels[idx])
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingDivergedError(f"loss became {value} at epoch {epoch}")
            model.params.zero_grad()
            tl.backward(loss)
            adam_step(model.params, state)
            total += value
            batches += 1
        row = {"epoch": epoch, "lr": state.lr, "train_loss": total / batches}
        history.append(row)
        if log:
            log(row)

    predictions = model.predict_proba(windows).argmax(axis=1)
    metrics.update(classification_metrics(labels, predictions))
    metrics["history"] = history
    return model, metrics


def classification_metrics(truth: np.ndarray, predicted: np.ndarray) -> dict:
    """Accuracy, confusion matrix, and per-class precision/recall."""
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    for t, p in zip(truth, predicted):
        confusion[t, p] += 1
    per_class = {}
    for c in range(N_CLASSES):
        tp = confusion[c, c]
        support = confusion[c].sum()
        claimed = confusion[:, c].sum()
        per_class[GAIT_LABELS[c]] = {
            "precision": float(tp / claimed) if claimed else float("nan"),
            "recall": float(tp / support) if support else float("nan"),
            "support": int(support),
        }
    return {"accuracy": float((truth == predicted).mean()),
            "confusion": confusion.tolist(),
            "per_class": per_class}
