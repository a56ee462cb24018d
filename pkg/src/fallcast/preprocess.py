"""Keypoint cleanup chain: gap filling, outlier correction, low-pass filtering.

The chain runs in a fixed order.  Missing keypoints are first extrapolated
from the previous two (already repaired) samples; keypoints that jump faster
than a velocity threshold are then replaced the same way; finally every
coordinate series goes through a causal second-order Butterworth low-pass.
Filtering is one-pass (causal) because the pipeline targets live use; the
group delay that introduces is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnrecoverableGapError
from .skeleton import KEYPOINT_NAMES, LabeledSequence, N_KEYPOINTS, torso_length


@dataclass
class FilterCoefficients:
    """Second-order IIR section, denominator normalized so a0 = 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float
    cutoff_hz: float
    sample_rate_hz: float

    def dc_gain(self) -> float:
        return (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)

    def pole_radius(self) -> float:
        return float(np.max(np.abs(np.roots([1.0, self.a1, self.a2]))))


@dataclass
class PreprocessConfig:
    velocity_threshold: float = 0.3       # torso-lengths per frame
    cutoff_hz: float = 10.0
    sample_rate_hz: float = 30.0

    def __post_init__(self):
        if self.velocity_threshold <= 0:
            raise ValueError("velocity threshold must be positive")
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise ValueError(
                f"cutoff {self.cutoff_hz} Hz must lie in (0, {self.sample_rate_hz / 2}) Hz")


@dataclass
class PreprocessReport:
    """Per-keypoint repair counts, JSON-serializable."""

    filled: list = field(default_factory=lambda: [0] * N_KEYPOINTS)
    corrected: list = field(default_factory=lambda: [0] * N_KEYPOINTS)

    def to_dict(self) -> dict:
        return {
            "filled": {KEYPOINT_NAMES[k]: int(self.filled[k]) for k in range(N_KEYPOINTS)},
            "corrected": {KEYPOINT_NAMES[k]: int(self.corrected[k]) for k in range(N_KEYPOINTS)},
            "filled_total": int(sum(self.filled)),
            "corrected_total": int(sum(self.corrected)),
        }


def _extrapolate(xy: np.ndarray, t: int, k: int) -> np.ndarray:
    # linear continuation of the previous two (repaired) samples
    return 2.0 * xy[t - 1, k] - xy[t - 2, k]


def fill_missing(seq: LabeledSequence) -> tuple[LabeledSequence, list[int]]:
    """Extrapolate every invalid keypoint from its previous two samples.

    A keypoint must have at least two valid frames before its first gap;
    otherwise the gap is unrecoverable and an error names frame and keypoint.
    """
    xy = seq.xy.copy()
    valid = seq.valid.copy()
    filled = [0] * N_KEYPOINTS
    for k in range(N_KEYPOINTS):
        seen = 0
        for t in range(len(seq)):
            if valid[t, k]:
                seen += 1
                continue
            if seen < 2:
                raise UnrecoverableGapError(
                    f"sequence {seq.name!r}: keypoint {KEYPOINT_NAMES[k]} missing at frame {t} "
                    f"with only {seen} valid prior frame(s)")
            xy[t, k] = _extrapolate(xy, t, k)
            valid[t, k] = True
            seen += 1
            filled[k] += 1
    out = LabeledSequence(xy, valid, None if seq.labels is None else seq.labels.copy(),
                          seq.fps, seq.name)
    return out, filled


def correct_outliers(seq: LabeledSequence,
                     config: PreprocessConfig) -> tuple[LabeledSequence, list[int]]:
    """Replace keypoints whose per-frame displacement exceeds the threshold.

    Displacement is measured in torso-lengths of the previous (repaired)
    frame; replacements reuse the two-point linear extrapolation, so checks
    at later frames see corrected history.  Requires a gap-free sequence.
    """
    if not seq.valid.all():
        raise ValueError("correct_outliers needs a gap-free sequence; run fill_missing first")
    xy = seq.xy.copy()
    corrected = [0] * N_KEYPOINTS
    for t in range(2, len(seq)):
        scale = max(torso_length(xy[t - 1]), 1e-12)
        step = np.hypot(*(xy[t] - xy[t - 1]).T) / scale
        for k in np.nonzero(step > config.velocity_threshold)[0]:
            xy[t, k] = _extrapolate(xy, t, k)
            corrected[k] += 1
    out = LabeledSequence(xy, seq.valid.copy(),
                          None if seq.labels is None else seq.labels.copy(),
                          seq.fps, seq.name)
    return out, corrected


def butterworth_design(cutoff_hz: float, sample_rate_hz: float) -> FilterCoefficients:
    """Second-order Butterworth low-pass via the prewarped bilinear transform.

    Analog prototype 1 / (s^2 + sqrt(2) s + 1) with s mapped through
    K = tan(pi * fc / fs).
    """
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ValueError(
            f"cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist "
            f"({sample_rate_hz / 2} Hz)")
    k = np.tan(np.pi * cutoff_hz / sample_rate_hz)
    k2 = k * k
    norm = 1.0 / (1.0 + np.sqrt(2.0) * k + k2)
    coeffs = FilterCoefficients(
        b0=k2 * norm, b1=2.0 * k2 * norm, b2=k2 * norm,
        a1=2.0 * (k2 - 1.0) * norm,
        a2=(1.0 - np.sqrt(2.0) * k + k2) * norm,
        cutoff_hz=cutoff_hz, sample_rate_hz=sample_rate_hz)
    # design-time stability and normalization checks
    if abs(coeffs.dc_gain() - 1.0) > 1e-9:
        raise AssertionError(f"DC gain {coeffs.dc_gain()} departs from unity")
    if coeffs.pole_radius() >= 1.0:
        raise AssertionError(f"unstable design, pole radius {coeffs.pole_radius()}")
    return coeffs


def lowpass_filter(series: np.ndarray, coeffs: FilterCoefficients) -> np.ndarray:
    """Causal direct-form II transposed filter over a 1-D series.

    The internal state starts as if the first sample had been held forever,
    so a constant series passes through unchanged from sample zero.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("lowpass_filter expects a non-empty 1-D series")
    b0, b1, b2, a1, a2 = coeffs.b0, coeffs.b1, coeffs.b2, coeffs.a1, coeffs.a2
    x0 = x[0]
    z1 = (b1 + b2 - a1 - a2) * x0     # steady state for constant input x0
    z2 = (b2 - a2) * x0
    y = np.empty_like(x)
    for n in range(x.size):
        yn = b0 * x[n] + z1
        z1 = b1 * x[n] - a1 * yn + z2
        z2 = b2 * x[n] - a2 * yn
        y[n] = yn
    return y


def filter_sequence(seq: LabeledSequence, coeffs: FilterCoefficients) -> LabeledSequence:
    """Apply the low-pass to every keypoint coordinate series."""
    if not seq.valid.all():
        raise ValueError("filter_sequence needs a gap-free sequence")
    flat = seq.xy.reshape(len(seq), -1)
    out = np.empty_like(flat)
    for c in range(flat.shape[1]):
        out[:, c] = lowpass_filter(flat[:, c], coeffs)
    return LabeledSequence(out.reshape(seq.xy.shape), seq.valid.copy(),
                           None if seq.labels is None else seq.labels.copy(),
                           seq.fps, seq.name)


def preprocess_sequence(seq: LabeledSequence,
                        config: PreprocessConfig | None = None
                        ) -> tuple[LabeledSequence, PreprocessReport]:
    """Full cleanup chain: fill gaps, correct outliers, low-pass filter."""
    config = config or PreprocessConfig()
    report = PreprocessReport()
    seq, report.filled = fill_missing(seq)
    seq, report.corrected = correct_outliers(seq, config)
    coeffs = butterworth_design(config.cutoff_hz, config.sample_rate_hz)
    return filter_sequence(seq, coeffs), report
