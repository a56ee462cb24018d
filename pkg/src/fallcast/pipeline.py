"""End-to-end orchestration: preprocess -> anticipate -> classify, plus the
evaluation protocols for anticipation error and per-horizon accuracy.

Horizons are frame counts at 30 fps (3 frames = 100 ms).  The decoupled mode
runs one offset-0 classifier on windows that slide into the future, mixing
observed and predicted frames; the baseline mode runs per-offset classifiers
on observed windows only.  Nothing on the prediction path reads ground truth
past the anticipation start; future frames are touched only for scoring.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .anticipator import AnticipatorModel, MAX_HORIZON, WINDOW, anticipation_error
from .classifier import DgnnModel
from .errors import ConfigurationError, WindowUnderflowError
from .preprocess import PreprocessConfig, preprocess_sequence
from .skeleton import GAIT_LABELS, LabeledSequence, relative_series

HORIZONS = (0, 3, 6, 9, 12, 15)
STANDARD_FPS = 30.0

# Published current-state accuracies quoted for context in reports (2-class
# models without anticipation).
LITERATURE_ACCURACY = {
    "CNN": 0.917,
    "VGG16 Net": 0.951,
    "RNN": 0.928,
    "ConvAutoencoder": 0.962,
}


def _check_horizons(horizons) -> tuple[int, ...]:
    hs = tuple(int(h) for h in horizons)
    if not hs:
        raise ValueError("need at least one horizon")
    if any(h < 0 or h > MAX_HORIZON for h in hs):
        raise ValueError(f"horizons must lie in 0..{MAX_HORIZON}, got {hs}")
    if len(set(hs)) != len(hs):
        raise ValueError(f"duplicate horizons in {hs}")
    return hs


def check_fps(fps: float, allow_any_fps: bool = False) -> None:
    if allow_any_fps:
        return
    if abs(fps - STANDARD_FPS) > 1e-9:
        raise ConfigurationError(
            f"horizon mapping assumes {STANDARD_FPS} fps, got {fps}; "
            "pass allow_any_fps to override")


def _sliding_windows(rel: np.ndarray, starts: np.ndarray) -> np.ndarray:
    return np.stack([rel[t - WINDOW + 1:t + 1] for t in starts])


def _eval_starts(n_frames: int, max_h: int, stride: int) -> np.ndarray:
    first, last = WINDOW - 1, n_frames - 1 - max_h
    if last < first:
        return np.empty(0, dtype=int)
    return np.arange(first, last + 1, stride)


def _horizon_windows(windows: np.ndarray, future: np.ndarray, h: int) -> np.ndarray:
    """Windows ending h frames ahead: observed tail plus the first h predictions."""
    if h == 0:
        return windows
    return np.concatenate([windows[:, h:, :], future[:, :h, :]], axis=1)


# ---------------------------------------------------------------------------
# single-shot anticipation


@dataclass
class AnticipationResult:
    """Per-horizon outcome for one anticipation call."""

    at_frame: int
    horizons: dict = field(default_factory=dict)   # h -> {features, probabilities, state}
    inference_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "at_frame": self.at_frame,
            "inference_time_s": self.inference_time_s,
            "horizons": {
                str(h): {
                    "features": entry["features"].tolist(),
                    "probabilities": entry["probabilities"].tolist(),
                    "state": int(entry["state"]),
                    "state_name": GAIT_LABELS[int(entry["state"])],
                } for h, entry in sorted(self.horizons.items())
            },
        }


def anticipate_fall(anticipator: AnticipatorModel, classifier: DgnnModel,
                    history: LabeledSequence, horizons=HORIZONS,
                    at: int | None = None, allow_any_fps: bool = False) -> AnticipationResult:
    """Classify the gait state now and at each future horizon.

    ``history`` must be preprocessed (gap-free).  The horizon-0 entry uses the
    observed window; larger horizons classify windows that mix observed frames
    with the autoregressive rollout.
    """
    hs = _check_horizons(horizons)
    check_fps(history.fps, allow_any_fps)
    end = len(history) - 1 if at is None else at
    if end < WINDOW - 1 or end >= len(history):
        raise WindowUnderflowError(
            f"anticipation at frame {end} needs {WINDOW} frames of history "
            f"(sequence has {len(history)})")
    rel = relative_series(history)[:end + 1]
    window = rel[None, end - WINDOW + 1:end + 1]

    start = time.perf_counter()
    max_h = max(hs)
    future = anticipator.rollout_batch(window, max_h) if max_h > 0 else None
    result = AnticipationResult(at_frame=end)
    for h in hs:
        win_h = window if h == 0 else _horizon_windows(window, future, h)
        probs = classifier.predict_proba(win_h)[0]
        features = window[0, -1] if h == 0 else future[0, h - 1]
        result.horizons[h] = {"features": features.copy(),
                              "probabilities": probs,
                              "state": int(probs.argmax())}
    result.inference_time_s = time.perf_counter() - start
    return result


# ---------------------------------------------------------------------------
# anticipation-error protocol (normalized Euclidean distance per horizon)


@dataclass
class AnticipationReport:
    horizons: tuple
    fps: float
    mean: dict
    std: dict
    n_sequences: int

    def seconds(self, h: int) -> float:
        return h / self.fps

    def to_dict(self) -> dict:
        return {
            "protocol": "anticipation-error",
            "fps": self.fps,
            "n_sequences": self.n_sequences,
            "per_horizon": [
                {"horizon_frames": h, "anticipation_time_s": round(self.seconds(h), 6),
                 "mean": self.mean[h], "std": self.std[h]}
                for h in self.horizons
            ],
        }

    def csv_rows(self) -> list[list]:
        rows = [["anticipation_time_s", "horizon_frames", "mean_error", "std_error"]]
        for h in self.horizons:
            rows.append([round(self.seconds(h), 6), h, self.mean[h], self.std[h]])
        return rows


def evaluate_anticipation(anticipator: AnticipatorModel,
                          test_seqs: list[LabeledSequence],
                          horizons=HORIZONS, stride: int = 1,
                          allow_any_fps: bool = False) -> AnticipationReport:
    """Per-horizon mean/std of the anticipation error over test sequences."""
    hs = _check_horizons(horizons)
    if not test_seqs:
        raise ValueError("empty test set")
    for seq in test_seqs:
        check_fps(seq.fps, allow_any_fps)
    max_h = max(hs)
    per_seq: dict[int, list[float]] = {h: [] for h in hs}
    usable = 0
    for seq in test_seqs:
        rel = relative_series(seq)
        starts = _eval_starts(len(rel), max_h, stride)
        if starts.size == 0:
            continue
        usable += 1
        windows = _sliding_windows(rel, starts)
        future = anticipator.rollout_batch(windows, max_h) if max_h > 0 else None
        for h in hs:
            if h == 0:
                per_seq[h].append(0.0)     # horizon 0 evaluates the observed frame
                continue
            if stride == 1:
                err = anticipation_error(future[:, h - 1, :], rel[WINDOW - 1:], h)
            else:
                diff = (future[:, h - 1, :] - rel[starts + h]).reshape(len(starts), -1, 2)
                err = float(np.hypot(diff[..., 0], diff[..., 1]).mean())
            per_seq[h].append(err)
    if usable == 0:
        raise ValueError(f"no test sequence is long enough for horizon {max_h}")
    mean = {h: float(np.mean(per_seq[h])) for h in hs}
    std = {h: float(np.std(per_seq[h])) for h in hs}
    return AnticipationReport(horizons=hs, fps=STANDARD_FPS, mean=mean, std=std,
                              n_sequences=usable)


# ---------------------------------------------------------------------------
# accuracy protocol (frame-level, per horizon)


@dataclass
class AccuracyReport:
    mode: str
    horizons: tuple
    fps: float
    accuracy: dict
    n_windows: dict
    literature: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "protocol": "fall-anticipation-accuracy",
            "mode": self.mode,
            "fps": self.fps,
            "per_horizon": [
                {"horizon_frames": h, "anticipation_time_ms": round(1000.0 * h / self.fps),
                 "accuracy": self.accuracy[h], "n_windows": self.n_windows[h]}
                for h in self.horizons
            ],
            "literature_current_state_reference": self.literature,
        }

    def csv_rows(self) -> list[list]:
        rows = [["mode", "horizon_frames", "anticipation_time_ms", "accuracy", "n_windows"]]
        for h in self.horizons:
            rows.append([self.mode, h, round(1000.0 * h / self.fps),
                         self.accuracy[h], self.n_windows[h]])
        return rows


def evaluate_accuracy(test_seqs: list[LabeledSequence], horizons=HORIZONS,
                      mode: str = "decoupled",
                      anticipator: AnticipatorModel | None = None,
                      classifier: DgnnModel | None = None,
                      baseline_classifiers: dict | None = None,
                      stride: int = 1, allow_any_fps: bool = False) -> AccuracyReport:
    """Frame-level 3-class accuracy per horizon.

    ``decoupled`` classifies predicted windows with one offset-0 classifier
    and needs ``anticipator`` + ``classifier``; ``dgnn_only`` classifies
    observed windows with one pre-trained classifier per horizon offset,
    supplied in ``baseline_classifiers``.
    """
    hs = _check_horizons(horizons)
    if not test_seqs:
        raise ValueError("empty test set")
    for seq in test_seqs:
        check_fps(seq.fps, allow_any_fps)
    if mode == "decoupled":
        if anticipator is None or classifier is None:
            raise ConfigurationError("decoupled mode needs an anticipator and a classifier")
    elif mode == "dgnn_only":
        missing = [h for h in hs if baseline_classifiers is None or h not in baseline_classifiers]
        if missing:
            raise ConfigurationError(
                f"dgnn_only mode is missing classifiers for offsets {missing}")
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")

    max_h = max(hs)
    correct = {h: 0 for h in hs}
    total = {h: 0 for h in hs}
    for seq in test_seqs:
        if seq.labels is None:
            raise ValueError(f"sequence {seq.name!r} has no labels")
        rel = relative_series(seq)
        starts = _eval_starts(len(rel), max_h, stride)
        if starts.size == 0:
            continue
        windows = _sliding_windows(rel, starts)
        future = None
        if mode == "decoupled" and max_h > 0:
            future = anticipator.rollout_batch(windows, max_h)
        for h in hs:
            truth = seq.labels[starts + h]
            if mode == "decoupled":
                pred = classifier.predict_proba(
                    _horizon_windows(windows, future, h)).argmax(axis=1)
            else:
                pred = baseline_classifiers[h].predict_proba(windows).argmax(axis=1)
            correct[h] += int((pred == truth).sum())
            total[h] += len(truth)
    if not any(total.values()):
        raise ValueError(f"no test sequence is long enough for horizon {max_h}")
    accuracy = {h: float(correct[h] / total[h]) for h in hs}
    return AccuracyReport(mode=mode, horizons=hs, fps=STANDARD_FPS,
                          accuracy=accuracy, n_windows=total,
                          literature=dict(LITERATURE_ACCURACY))


# ---------------------------------------------------------------------------
# real-time measurement


def measure_latency(anticipator: AnticipatorModel, classifier: DgnnModel,
                    raw_history: LabeledSequence, horizons=HORIZONS,
                    repeats: int = 30, config: PreprocessConfig | None = None,
                    allow_any_fps: bool = False) -> dict:
    """Median wall-clock time for one full frame: preprocess + rollout + classify."""
    hs = _check_horizons(horizons)
    check_fps(raw_history.fps, allow_any_fps)
    if repeats < 1:
        raise ValueError("repeats must be positive")
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        clean, _report = preprocess_sequence(raw_history, config)
        result = anticipate_fall(anticipator, classifier, clean, hs,
                                 allow_any_fps=allow_any_fps)
        times.append(time.perf_counter() - t0)
    return {"median_ms": float(np.median(times) * 1e3),
            "min_ms": float(np.min(times) * 1e3),
            "max_ms": float(np.max(times) * 1e3),
            "repeats": repeats,
            "result": result}
