import json
import os

import numpy as np
import pytest

from fallcast.data import (load_manifest, load_sequence, load_sequences,
                           save_dataset, save_sequence, split)
from fallcast.errors import SchemaError, SequenceParseError
from fallcast.skeleton import (GAIT_FALL, GAIT_STABLE, LabeledSequence, N_KEYPOINTS,
                               relative_series)
from fallcast.synth import SynthConfig, synth_gait, trunk_angle_deg


def small_sequence(n=3, with_labels=True, name="seq"):
    rng = np.random.default_rng(0)
    xy = rng.normal(100.0, 30.0, size=(n, N_KEYPOINTS, 2))
    valid = np.ones((n, N_KEYPOINTS), dtype=bool)
    labels = np.zeros(n, dtype=int) if with_labels else None
    return LabeledSequence(xy, valid, labels, 30.0, name=name)


# ---------------------------------------------------------------------------
# sequence files


def test_sequence_round_trip_is_bit_identical(tmp_path):
    seq = small_sequence(n=1)
    p1 = os.path.join(tmp_path, "a.jsonl")
    save_sequence(seq, p1)
    loaded = load_sequence(p1)
    p2 = os.path.join(tmp_path, "b.jsonl")
    save_sequence(loaded, p2)
    reloaded = load_sequence(p2)
    assert np.array_equal(loaded.xy.view(np.uint64), reloaded.xy.view(np.uint64))
    assert np.array_equal(loaded.xy.view(np.uint64), seq.xy.view(np.uint64))
    assert open(p1).read() == open(p2).read()


def test_sequence_with_11_keypoints_is_rejected(tmp_path):
    path = os.path.join(tmp_path, "bad.jsonl")
    row = {"t": 0, "kp": [[0.0, 0.0]] * 11, "label": 0}
    with open(path, "w") as fh:
        fh.write(json.dumps(row) + "\n")
    with pytest.raises(SchemaError, match="frame 0 has 11 keypoints"):
        load_sequence(path)


def test_null_keypoint_loads_as_invalid(tmp_path):
    path = os.path.join(tmp_path, "gap.jsonl")
    kp = [[1.0, 2.0]] * N_KEYPOINTS
    kp[5] = None
    with open(path, "w") as fh:
        fh.write(json.dumps({"t": 0, "kp": kp}) + "\n")
    seq = load_sequence(path)
    assert not seq.valid[0, 5]
    assert seq.valid[0, 4]
    assert seq.labels is None


def test_malformed_line_names_file_and_line(tmp_path):
    path = os.path.join(tmp_path, "broken.jsonl")
    with open(path, "w") as fh:
        fh.write('{"t": 0, "kp": ' + json.dumps([[0.0, 0.0]] * 12) + "}\n")
        fh.write("not json at all\n")
    with pytest.raises(SequenceParseError, match="broken.jsonl:2"):
        load_sequence(path)


def test_non_contiguous_frames_rejected(tmp_path):
    path = os.path.join(tmp_path, "skip.jsonl")
    kp = json.dumps([[0.0, 0.0]] * 12)
    with open(path, "w") as fh:
        fh.write('{"t": 0, "kp": %s}\n{"t": 2, "kp": %s}\n' % (kp, kp))
    with pytest.raises(SchemaError, match="not contiguous"):
        load_sequence(path)


def test_dataset_save_load_via_manifest(tmp_path):
    seqs = [small_sequence(4, name=f"s{i}") for i in range(3)]
    manifest_path = save_dataset(seqs, str(tmp_path / "d"), fps=30.0, source="synthetic")
    manifest = load_manifest(manifest_path)
    assert manifest.fps == 30.0
    loaded = load_sequences(manifest)
    assert len(loaded) == 3
    np.testing.assert_array_equal(loaded[1].xy, seqs[1].xy)


def test_manifest_missing_file_rejected(tmp_path):
    seqs = [small_sequence(2, name="s0")]
    manifest_path = save_dataset(seqs, str(tmp_path / "d"))
    os.unlink(tmp_path / "d" / "s0.jsonl")
    with pytest.raises(SchemaError, match="missing sequence files"):
        load_manifest(manifest_path)


# ---------------------------------------------------------------------------
# split


def test_split_80_20_counts():
    seqs = [small_sequence(2, name=f"s{i}") for i in range(10)]
    train, test = split(seqs, 0.8, seed=1)
    assert len(train) == 8 and len(test) == 2


def test_split_deterministic_and_disjoint():
    seqs = [small_sequence(2, name=f"s{i}") for i in range(7)]
    t1, e1 = split(seqs, 0.8, seed=5)
    t2, e2 = split(seqs, 0.8, seed=5)
    assert [s.name for s in t1] == [s.name for s in t2]
    assert [s.name for s in e1] == [s.name for s in e2]
    names = {s.name for s in t1} | {s.name for s in e1}
    assert names == {s.name for s in seqs}
    assert not ({s.name for s in t1} & {s.name for s in e1})


def test_split_needs_two_sequences():
    with pytest.raises(ValueError):
        split([small_sequence(2)], 0.8, seed=0)


# ---------------------------------------------------------------------------
# synthetic generator


def default_cfg(**kw):
    base = dict(stable_sequences=2, fall_sequences=2, frames=90, onset_min=30,
                onset_max=50, transient_frames=10, seed=3)
    base.update(kw)
    return SynthConfig(**base)


def test_synth_zero_fall_sequences_all_stable():
    seqs = synth_gait(default_cfg(fall_sequences=0))
    assert len(seqs) == 2
    for seq in seqs:
        assert np.all(seq.labels == GAIT_STABLE)


def test_synth_fall_final_frame_is_near_horizontal():
    for seq in synth_gait(default_cfg()):
        if np.any(seq.labels == GAIT_FALL):
            assert trunk_angle_deg(seq.xy[-1]) < 20.0
            assert trunk_angle_deg(seq.xy[0]) > 70.0


def test_synth_labels_non_decreasing():
    for seq in synth_gait(default_cfg(fall_sequences=4)):
        assert np.all(np.diff(seq.labels) >= 0)


def test_synth_deterministic_given_seed():
    a = synth_gait(default_cfg(noise_std=0.0))
    b = synth_gait(default_cfg(noise_std=0.0))
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.xy.view(np.uint64), sb.xy.view(np.uint64))
        assert np.array_equal(sa.labels, sb.labels)
    noisy_a = synth_gait(default_cfg())
    noisy_b = synth_gait(default_cfg())
    for sa, sb in zip(noisy_a, noisy_b):
        assert np.array_equal(sa.xy.view(np.uint64), sb.xy.view(np.uint64))


def test_synth_rejects_transient_beyond_sequence():
    with pytest.raises(ValueError):
        default_cfg(frames=55, onset_max=50, transient_frames=10)


def test_synth_classes_separable_by_nearest_centroid():
    # sanity floor: pipeline tests are meaningless below this
    seqs = synth_gait(SynthConfig(stable_sequences=6, fall_sequences=6, seed=11))
    windows, labels = [], []
    for seq in seqs:
        rel = relative_series(seq)
        for t in range(14, len(rel), 2):
            windows.append(rel[t - 14:t + 1].reshape(-1))
            labels.append(seq.labels[t])
    windows = np.array(windows)
    labels = np.array(labels)
    centroids = np.stack([windows[labels == c].mean(axis=0) for c in range(3)])
    dist = np.linalg.norm(windows[:, None, :] - centroids[None], axis=2)
    accuracy = (dist.argmin(axis=1) == labels).mean()
    assert accuracy >= 0.9
