"""Synthetic gait generator used as the desk-scale oracle.

Stable frames oscillate limbs sinusoidally around an upright walking pose.
A fall is a smoothstep blend from the pose frozen at onset toward a lying
pose (the standing pose rotated 90 degrees about the hip midpoint and
dropped to the ground), so the body center descends and the trunk rotates
to exactly horizontal by construction.  Blend progress u sweeps
(t - onset + 1) / (transient + 1): frames before onset are stable, the
ramp interior is the transient span, and the first fully-lying frame
onward is the fall state, which makes labels non-decreasing in time.

Falls announce themselves: a destabilization phase covering the
``precursor_frames`` before onset (still labeled stable) ramps a forward
trunk lean while the gait swing decays.  Collapse timing is therefore
observable from the feature window, which is what makes anticipation at the
full 15-frame horizon possible at all; with unannounced random onsets no
predictor could beat the onset-straddling error floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import (GAIT_FALL, GAIT_STABLE, GAIT_TRANSIENT, LabeledSequence,
                       N_KEYPOINTS)

TORSO_PX = 50.0

# upright pose, y up, hip midpoint at x = 0; indices follow KEYPOINT_NAMES
_BASE_POSE = np.array([
    [-16.0, 145.0], [16.0, 145.0],     # shoulders
    [-20.0, 118.0], [20.0, 118.0],     # elbows
    [-22.0, 92.0], [22.0, 92.0],       # wrists
    [-9.0, 95.0], [9.0, 95.0],         # hips
    [-10.0, 50.0], [10.0, 50.0],       # knees
    [-10.0, 5.0], [10.0, 5.0],         # ankles
])
_HIP_MID = np.array([0.0, 95.0])

# swing gains per keypoint: (x gain in units of limb amplitude, phase shift)
_SWING = {
    2: (0.5, np.pi), 4: (0.9, np.pi),      # left arm counter-swings left leg
    3: (0.5, 0.0), 5: (0.9, 0.0),          # right arm with left leg
    8: (0.7, 0.0), 10: (1.2, -0.4),        # left leg
    9: (0.7, np.pi), 11: (1.2, np.pi - 0.4),  # right leg
}


@dataclass
class SynthConfig:
    stable_sequences: int = 44
    fall_sequences: int = 28
    frames: int = 120
    fps: float = 30.0
    gait_hz: float = 1.1
    amplitude: float = 0.24           # limb swing, torso-lengths
    onset_min: int = 45               # fall onset frame range, inclusive
    onset_max: int = 70
    transient_frames: int = 18
    precursor_frames: int = 24        # destabilization before onset, labeled stable
    noise_std: float = 0.006          # torso-lengths
    seed: int = 0

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise std must be non-negative")
        if not 0 <= self.onset_min <= self.onset_max:
            raise ValueError("bad onset range")
        if self.onset_max + self.transient_frames + 1 > self.frames:
            raise ValueError("transient span does not fit within the sequence")
        if self.frames < 2 or self.transient_frames < 1:
            raise ValueError("frames and transient duration must be positive")
        if self.precursor_frames < 0 or self.precursor_frames > self.onset_min:
            raise ValueError("precursor must be non-negative and precede the earliest onset")


def _walk_pose(t_sec: float, phase0: float, speed: float, cfg: SynthConfig,
               destabilized: float = 0.0) -> np.ndarray:
    pose = _BASE_POSE.copy()
    phase = 2.0 * np.pi * cfg.gait_hz * t_sec + phase0
    amp = cfg.amplitude * TORSO_PX * (1.0 - 0.5 * destabilized)
    for k, (gain, shift) in _SWING.items():
        pose[k, 0] += gain * amp * np.sin(phase + shift)
    # feet lift on the forward swing; smooth so the orbit stays analytic
    pose[10, 1] += 0.1 * amp * (1.0 + np.sin(phase))
    pose[11, 1] += 0.1 * amp * (1.0 + np.sin(phase + np.pi))
    if destabilized > 0.0:
        # stumble: the lean sets in as a step, then ramps; a noisy normal
        # stride can never look like even the earliest destabilized frame
        angle = np.radians(4.0 + 12.0 * destabilized)
        hip = 0.5 * (pose[6] + pose[7])
        upper = slice(0, 6)    # shoulders, elbows, wrists
        d = pose[upper] - hip
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        pose[upper, 0] = hip[0] + cos_a * d[:, 0] + sin_a * d[:, 1]
        pose[upper, 1] = hip[1] - sin_a * d[:, 0] + cos_a * d[:, 1]
        pose[:, 1] -= 0.1 * TORSO_PX * destabilized
    pose[:, 0] += speed * t_sec
    pose[:, 1] += 0.04 * TORSO_PX * np.sin(2.0 * phase)   # gait bob
    return pose


def _lying_pose(from_pose: np.ndarray) -> np.ndarray:
    """Rotate about the hip midpoint until the trunk is horizontal, then drop."""
    hip = 0.5 * (from_pose[6] + from_pose[7])
    shoulders = 0.5 * (from_pose[0] + from_pose[1])
    trunk = shoulders - hip
    cos_a, sin_a = trunk / np.linalg.norm(trunk)   # maps the trunk onto +x
    d = from_pose - hip
    rotated = np.stack([cos_a * d[:, 0] + sin_a * d[:, 1],
                        -sin_a * d[:, 0] + cos_a * d[:, 1]], axis=1) + hip
    rotated[:, 0] += 20.0                      # falls forward
    rotated[:, 1] -= hip[1] - 25.0             # body settles near the ground
    return rotated


def _smoothstep(u: float) -> float:
    return u * u * (3.0 - 2.0 * u)


def synth_gait(config: SynthConfig | None = None) -> list[LabeledSequence]:
    """Generate labeled stable and fall sequences per the configuration."""
    cfg = config or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    sequences = []

    def finish(xy, labels, name):
        noise = rng.normal(0.0, cfg.noise_std * TORSO_PX, size=xy.shape)
        seq = LabeledSequence(xy + noise, np.ones(xy.shape[:2], dtype=bool),
                              labels, cfg.fps, name=name)
        sequences.append(seq)

    for i in range(cfg.stable_sequences):
        phase0 = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(20.0, 40.0)
        xy = np.stack([_walk_pose(t / cfg.fps, phase0, speed, cfg)
                       for t in range(cfg.frames)])
        finish(xy, np.full(cfg.frames, GAIT_STABLE), f"synth-stable-{i:03d}")

    for i in range(cfg.fall_sequences):
        phase0 = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(20.0, 40.0)
        onset = int(rng.integers(cfg.onset_min, cfg.onset_max + 1))
        pre = cfg.precursor_frames
        frozen = _walk_pose(onset / cfg.fps, phase0, speed, cfg, destabilized=1.0)
        lying = _lying_pose(frozen)
        xy = np.empty((cfg.frames, N_KEYPOINTS, 2))
        labels = np.empty(cfg.frames, dtype=np.int64)
        for t in range(cfg.frames):
            if t < onset:
                wobble = 0.0 if pre == 0 else max(0.0, (t - onset + pre + 1) / pre)
                xy[t] = _walk_pose(t / cfg.fps, phase0, speed, cfg, destabilized=wobble)
                labels[t] = GAIT_STABLE
            else:
                u = min(1.0, (t - onset + 1) / (cfg.transient_frames + 1))
                beta = _smoothstep(u)
                xy[t] = (1.0 - beta) * frozen + beta * lying
                labels[t] = GAIT_TRANSIENT if u < 1.0 else GAIT_FALL
        finish(xy, labels, f"synth-fall-{i:03d}")

    return sequences


def trunk_angle_deg(pose: np.ndarray) -> float:
    """Angle of the hip-to-shoulder axis above horizontal, degrees in [0, 90]."""
    shoulders = 0.5 * (pose[0] + pose[1])
    hips = 0.5 * (pose[6] + pose[7])
    d = shoulders - hips
    return float(np.degrees(np.arctan2(abs(d[1]), abs(d[0]))))
