"""LSTM movement predictor: a 15-frame window of relative features in, the
next frame's features out, rolled forward autoregressively for anticipation.

The head predicts the frame-to-frame displacement and adds it to the last
observed frame (a residual connection, standard in recurrent motion
prediction); holding still is then the zero function and rollout drift stays
bounded by the displacement error instead of the absolute pose error.

Rollout keeps the recurrent state alive: the window is encoded once from a
zero state (so the first step is exactly ``predict_next``), then each
predicted frame is fed back as the next input while the oldest frame slides
out of the classifier's view.  Re-encoding the whole window for every step
would multiply the per-frame cost roughly eightfold for identical one-step
training semantics, which would break the real-time budget at the production
model size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import tensorlib as tl
from .errors import TrainingDivergedError
from .optim import AdamState, LrSchedule, ParamStore, adam_step, load_checkpoint, save_checkpoint
from .skeleton import FEATURE_DIM, LabeledSequence, relative_series
from .tensorlib import Tensor

WINDOW = 15
MAX_HORIZON = 15


@dataclass
class TrainConfig:
    window: int = WINDOW
    batch_size: int = 32
    epochs: int = 300
    schedule: LrSchedule = field(default_factory=LrSchedule)
    seed: int = 0
    window_stride: int = 1     # subsample training windows for speed
    input_noise: float = 0.004  # i.i.d. Gaussian noise on training inputs
    drift_noise: float = 0.0    # coherent offset/ramp noise on training inputs
    lr_scale: dict = field(default_factory=dict)   # per-parameter LR multipliers
    # Both augmentations perturb the window only (targets stay untouched) and
    # teach the predictor to pull back toward the data manifold, which keeps
    # the autoregressive loop contractive under its own accumulated error;
    # the coherent terms mimic the shapes rollout drift actually takes.

    def __post_init__(self):
        if self.window != WINDOW:
            raise ValueError(f"window size is fixed at {WINDOW}")
        if self.batch_size < 1 or self.epochs < 1 or self.window_stride < 1:
            raise ValueError("batch size, epochs and stride must be positive")
        if self.input_noise < 0 or self.drift_noise < 0:
            raise ValueError("augmentation noise must be non-negative")


def lstm_cell(x: Tensor, h: Tensor, c: Tensor,
              wx: Tensor, wh: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM step on (B, D) input; gate order i, f, g, o."""
    hidden = h.data.shape[1]
    z = tl.add(tl.linear(x, wx), tl.linear(h, wh, b))
    i = tl.sigmoid(tl.slice_axis(z, 1, 0, hidden))
    f = tl.sigmoid(tl.slice_axis(z, 1, hidden, 2 * hidden))
    g = tl.tanh(tl.slice_axis(z, 1, 2 * hidden, 3 * hidden))
    o = tl.sigmoid(tl.slice_axis(z, 1, 3 * hidden, 4 * hidden))
    c_next = tl.add(tl.mul(f, c), tl.mul(i, g))
    h_next = tl.mul(o, tl.tanh(c_next))
    return h_next, c_next


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class AnticipatorModel:
    """Two stacked LSTM layers plus a fully connected head, 24 -> 24."""

    def __init__(self, input_size: int = FEATURE_DIM, hidden_size: int = 512,
                 num_layers: int = 2, dropout: float = 0.5, seed: int = 0):
        if input_size < 1 or hidden_size < 1 or num_layers < 1:
            raise ValueError("model sizes must be positive")
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.dropout = dropout
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        for layer in range(num_layers):
            d_in = input_size if layer == 0 else hidden_size
            self.params.add(f"lstm{layer}.wx", tl.xavier_init(d_in, 4 * hidden_size, rng))
            self.params.add(f"lstm{layer}.wh", tl.xavier_init(hidden_size, 4 * hidden_size, rng))
            self.params.add(f"lstm{layer}.b", np.zeros(4 * hidden_size))
        self.params.add("head.w", tl.xavier_init(hidden_size, input_size, rng))
        self.params.add("head.b", np.zeros(input_size))

    # -- training path (records the graph) ---------------------------------

    def forward_train(self, windows: np.ndarray, rng: np.random.Generator) -> Tensor:
        """Window batch (B, T, D) -> predicted next frame (B, D), dropout on."""
        b, t, d = windows.shape
        if d != self.input_size:
            raise ValueError(f"expected feature width {self.input_size}, got {d}")
        p = self.params
        seq = Tensor(np.ascontiguousarray(windows))
        for layer in range(self.num_layers):
            seq = tl.lstm_layer(seq, p[f"lstm{layer}.wx"], p[f"lstm{layer}.wh"],
                                p[f"lstm{layer}.b"])
            if layer < self.num_layers - 1:
                seq = tl.dropout(seq, self.dropout, rng)
        h_final = tl.reshape(tl.slice_axis(seq, 1, t - 1, t), (b, self.hidden_size))
        head_in = tl.dropout(h_final, self.dropout, rng)
        delta = tl.linear(head_in, p["head.w"], p["head.b"])
        return tl.add(delta, Tensor(np.ascontiguousarray(windows[:, -1, :])))

    # -- inference path (plain numpy, no graph) -----------------------------

    def _weights(self):
        p = self.params
        stack = [(p[f"lstm{l}.wx"].data, p[f"lstm{l}.wh"].data, p[f"lstm{l}.b"].data)
                 for l in range(self.num_layers)]
        return stack, p["head.w"].data, p["head.b"].data

    @staticmethod
    def _step(z: np.ndarray, h: np.ndarray, c: np.ndarray, wh: np.ndarray,
              hidden: int) -> tuple[np.ndarray, np.ndarray]:
        z = z + h @ wh.T
        i = _sigmoid(z[:, :hidden])
        f = _sigmoid(z[:, hidden:2 * hidden])
        g = np.tanh(z[:, 2 * hidden:3 * hidden])
        o = _sigmoid(z[:, 3 * hidden:])
        c = f * c + i * g
        return o * np.tanh(c), c

    def rollout_batch(self, windows: np.ndarray, k: int) -> np.ndarray:
        """Autoregressive continuation: (B, 15, D) -> (B, k, D) future frames."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim != 3 or windows.shape[1] != WINDOW or windows.shape[2] != self.input_size:
            raise ValueError(f"expected (B, {WINDOW}, {self.input_size}) windows, got {windows.shape}")
        if not 1 <= k <= MAX_HORIZON:
            raise ValueError(f"rollout steps must be in 1..{MAX_HORIZON}, got {k}")
        if not np.all(np.isfinite(windows)):
            raise ValueError("window contains non-finite values")
        b, t, _ = windows.shape
        hid = self.hidden_size
        stack, head_w, head_b = self._weights()

        # encode the window; input projections for a whole layer batch as one gemm
        states = []
        seq = windows
        for wx, wh, bias in stack:
            proj = seq.reshape(b * t, -1) @ wx.T + bias
            proj = proj.reshape(b, t, 4 * hid)
            h = np.zeros((b, hid))
            c = np.zeros((b, hid))
            outputs = np.empty((b, t, hid))
            for step in range(t):
                h, c = self._step(proj[:, step], h, c, wh, hid)
                outputs[:, step] = h
            states.append((h, c))
            seq = outputs

        future = np.empty((b, k, self.input_size))
        future[:, 0] = windows[:, -1, :] + h @ head_w.T + head_b
        for j in range(1, k):
            x = future[:, j - 1]
            last = x
            for layer, (wx, wh, bias) in enumerate(stack):
                h, c = states[layer]
                h, c = self._step(x @ wx.T + bias, h, c, wh, hid)
                states[layer] = (h, c)
                x = h
            future[:, j] = last + x @ head_w.T + head_b
        return future

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        return self.rollout_batch(windows, 1)[:, 0]

    # -- persistence ---------------------------------------------------------

    def config(self) -> dict:
        return {"input_size": self.input_size, "hidden_size": self.hidden_size,
                "num_layers": self.num_layers, "dropout": self.dropout}

    def save(self, path: str) -> None:
        save_checkpoint(path, "anticipator", self.config(), self.params.arrays())

    @classmethod
    def load(cls, path: str) -> "AnticipatorModel":
        kind, config, arrays = load_checkpoint(path)
        if kind != "anticipator":
            raise ValueError(f"{path}: checkpoint kind {kind!r}, expected 'anticipator'")
        model = cls(**config)
        model.params.load_arrays(arrays)
        return model


def predict_next(model: AnticipatorModel, window: np.ndarray) -> np.ndarray:
    """Next-frame features for one (15, 24) window, evaluation mode."""
    return model.predict_batch(np.asarray(window)[None])[0]


def rollout(model: AnticipatorModel, window: np.ndarray, k: int) -> np.ndarray:
    """Future trajectory of k frames (k <= 15) for one window."""
    return model.rollout_batch(np.asarray(window)[None], k)[0]


def anticipation_error(predicted: np.ndarray, truth: np.ndarray, t_a: int) -> float:
    """Mean per-keypoint Euclidean distance, predictions vs truth t_a ahead.

    ``predicted[i]`` is compared against ``truth[i + t_a]``; rows may be flat
    (24,) feature vectors or (12, 2) keypoint arrays.
    """
    pred = np.asarray(predicted, dtype=np.float64).reshape(len(predicted), -1, 2)
    true = np.asarray(truth, dtype=np.float64).reshape(len(truth), -1, 2)
    if t_a < 0:
        raise ValueError("anticipation offset must be non-negative")
    if pred.shape[1] != true.shape[1]:
        raise ValueError(f"keypoint counts differ: {pred.shape} vs {true.shape}")
    if len(pred) + t_a > len(true):
        raise ValueError(
            f"truth too short: need {len(pred) + t_a} frames, have {len(true)}")
    diff = pred - true[t_a:t_a + len(pred)]
    distances = np.hypot(diff[..., 0], diff[..., 1]).ravel().tolist()
    mean = 0.0
    # running mean: exact when all distances are equal, unlike sum-then-divide
    for i, value in enumerate(distances):
        mean += (value - mean) / (i + 1)
    return mean


def build_pairs(sequences: list[LabeledSequence], stride: int = 1
                ) -> tuple[np.ndarray, np.ndarray]:
    """(window, next frame) training pairs from relative-feature series."""
    wins, targets = [], []
    for seq in sequences:
        rel = relative_series(seq)
        for t in range(WINDOW - 1, len(rel) - 1, stride):
            wins.append(rel[t - WINDOW + 1:t + 1])
            targets.append(rel[t + 1])
    if not wins:
        raise ValueError("no training pairs; sequences shorter than the window?")
    return np.array(wins), np.array(targets)


def train_anticipator(train_seqs: list[LabeledSequence],
                      config: TrainConfig,
                      test_seqs: Optional[list[LabeledSequence]] = None,
                      init_model: Optional[AnticipatorModel] = None,
                      hidden_size: int = 512,
                      log=None) -> tuple[AnticipatorModel, list[dict]]:
    """Train (or fine-tune, via ``init_model``) the one-step-ahead predictor.

    Returns the model and the loss curve as a list of per-epoch rows
    ``{epoch, lr, train_loss, test_loss}``.
    """
    if not train_seqs:
        raise ValueError("empty training dataset")
    windows, targets = build_pairs(train_seqs, config.window_stride)
    test_pairs = build_pairs(test_seqs) if test_seqs else None

    model = init_model or AnticipatorModel(hidden_size=hidden_size, seed=config.seed)
    rng = np.random.default_rng(config.seed + 1)
    state = AdamState(lr_scale=dict(config.lr_scale))
    history = []
    for epoch in range(config.epochs):
        state.lr = config.schedule.rate(epoch)
        order = rng.permutation(len(windows))
        total, batches = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = windows[idx]
            if config.input_noise > 0.0:
                batch = batch + rng.normal(0.0, config.input_noise, size=batch.shape)
            if config.drift_noise > 0.0:
                nb, nt, nd = batch.shape
                offset = rng.normal(0.0, config.drift_noise, size=(nb, 1, nd))
                slope = rng.normal(0.0, config.drift_noise, size=(nb, 1, nd))
                ramp = np.linspace(-1.0, 1.0, nt)[None, :, None]
                batch = batch + offset + slope * ramp
            pred = model.forward_train(batch, rng)
            loss = tl.smooth_l1(pred, Tensor(targets[idx]))
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingDivergedError(f"loss became {value} at epoch {epoch}")
            model.params.zero_grad()
            tl.backward(loss)
            adam_step(model.params, state)
            total += value
            batches += 1
        row = {"epoch": epoch, "lr": state.lr, "train_loss": total / batches,
               "test_loss": float("nan")}
        if test_pairs is not None:
            pred = model.predict_batch(test_pairs[0])
            d = pred - test_pairs[1]
            ad = np.abs(d)
            row["test_loss"] = float(np.where(ad < 1.0, 0.5 * d * d, ad - 0.5).mean())
        history.append(row)
        if log:
            log(row)
    return model, history
