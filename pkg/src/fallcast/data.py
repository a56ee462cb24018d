"""Dataset files and splits.

Sequences are JSON Lines, one frame per line:

    {"t": 0, "kp": [[x, y], null, ...12 entries...], "label": 0|1|2|null}

A manifest JSON lists the sequence files plus the frame rate:

    {"schema": 1, "fps": 30.0, "source": "synthetic",
     "keypoint_order": [...], "files": ["seq_000.jsonl", ...]}

``null`` keypoints load with their validity flag cleared; ``label`` may be
omitted entirely for inference-only data.  Frame indices must be contiguous.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, SequenceParseError
from .optim import write_atomic
from .skeleton import KEYPOINT_NAMES, LabeledSequence, N_KEYPOINTS

MANIFEST_SCHEMA = 1
LABEL_SCHEME = "stable-transient-fall-v1"


@dataclass
class DatasetManifest:
    files: list = field(default_factory=list)
    fps: float = 30.0
    source: str = "unknown"
    label_scheme: str = LABEL_SCHEME
    base_dir: str = "."

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("manifest fps must be positive")

    def paths(self) -> list[str]:
        return [os.path.join(self.base_dir, f) for f in self.files]

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "fps": self.fps,
            "source": self.source,
            "label_scheme": self.label_scheme,
            "keypoint_order": list(KEYPOINT_NAMES),
            "files": list(self.files),
        }


def save_manifest(manifest: DatasetManifest, path: str) -> None:
    write_atomic(path, json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def load_manifest(path: str) -> DatasetManifest:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"{path}: unsupported manifest schema {doc.get('schema')}")
    m = DatasetManifest(files=doc["files"], fps=doc["fps"],
                        source=doc.get("source", "unknown"),
                        label_scheme=doc.get("label_scheme", LABEL_SCHEME),
                        base_dir=os.path.dirname(os.path.abspath(path)))
    missing = [p for p in m.paths() if not os.path.exists(p)]
    if missing:
        raise SchemaError(f"{path}: missing sequence files: {missing}")
    return m


def save_sequence(seq: LabeledSequence, path: str) -> None:
    lines = []
    for t in range(len(seq)):
        kp = [[float(x), float(y)] if seq.valid[t, k] else None
              for k, (x, y) in enumerate(seq.xy[t])]
        row = {"t": t, "kp": kp}
        if seq.labels is not None:
            row["label"] = int(seq.labels[t])
        lines.append(json.dumps(row, separators=(",", ":")))
    write_atomic(path, "\n".join(lines) + "\n")


def load_sequence(path: str, fps: float = 30.0) -> LabeledSequence:
    xy, valid, labels = [], [], []
    has_labels = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SequenceParseError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            kp = row.get("kp")
            if not isinstance(kp, list) or len(kp) != N_KEYPOINTS:
                n = len(kp) if isinstance(kp, list) else "no"
                raise SchemaError(
                    f"{path}:{lineno}: frame {row.get('t')} has {n} keypoints, expected {N_KEYPOINTS}")
            expected_t = len(xy)
            if row.get("t") != expected_t:
                raise SchemaError(
                    f"{path}:{lineno}: frame index {row.get('t')} not contiguous (expected {expected_t})")
            fxy = np.zeros((N_KEYPOINTS, 2))
            fvalid = np.zeros(N_KEYPOINTS, dtype=bool)
            for k, entry in enumerate(kp):
                if entry is None:
                    continue
                if (not isinstance(entry, list)) or len(entry) != 2:
                    raise SchemaError(f"{path}:{lineno}: keypoint {k} must be [x, y] or null")
                fxy[k] = entry
                fvalid[k] = True
            xy.append(fxy)
            valid.append(fvalid)
            label = row.get("label")
            if has_labels is None:
                has_labels = label is not None
            elif has_labels != (label is not None):
                raise SchemaError(f"{path}:{lineno}: labels must be present on all frames or none")
            if label is not None:
                if label not in (0, 1, 2):
                    raise SchemaError(f"{path}:{lineno}: label {label!r} not in {{0, 1, 2}}")
                labels.append(label)
    if not xy:
        raise SchemaError(f"{path}: empty sequence")
    return LabeledSequence(np.array(xy), np.array(valid),
                           np.array(labels) if has_labels else None, fps,
                           name=os.path.splitext(os.path.basename(path))[0])


def load_sequences(manifest: DatasetManifest) -> list[LabeledSequence]:
    return [load_sequence(p, fps=manifest.fps) for p in manifest.paths()]


def save_dataset(sequences: list[LabeledSequence], out_dir: str,
                 fps: float = 30.0, source: str = "unknown") -> str:
    """Write sequences plus manifest under ``out_dir``; returns manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for i, seq in enumerate(sequences):
        name = seq.name or f"seq_{i:03d}"
        fname = f"{name}.jsonl"
        save_sequence(seq, os.path.join(out_dir, fname))
        files.append(fname)
    manifest = DatasetManifest(files=files, fps=fps, source=source, base_dir=out_dir)
    path = os.path.join(out_dir, "manifest.json")
    save_manifest(manifest, path)
    return path


def split(sequences: list, ratio: float = 0.8, seed: int = 0) -> tuple[list, list]:
    """Deterministic train/test partition at sequence granularity."""
    if len(sequences) < 2:
        raise ValueError("split needs at least 2 sequences")
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(sequences))
    n_train = int(round(len(sequences) * ratio))
    n_train = max(1, min(len(sequences) - 1, n_train))
    train = [sequences[i] for i in order[:n_train]]
    test = [sequences[i] for i in order[n_train:]]
    return train, test
