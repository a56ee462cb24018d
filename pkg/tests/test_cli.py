import hashlib
import json
import os

import numpy as np
import pytest

from fallcast.cli import main


def file_hashes(root):
    out = {}
    for dirpath, _dirs, files in os.walk(root):
        for name in files:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            out[rel] = hashlib.sha256(open(path, "rb").read()).hexdigest()
    return out


def run(*args):
    return main([str(a) for a in args])


SYNTH_SMALL = ["--stable", 2, "--falls", 1, "--frames", 60, "--onset-min", 30,
               "--onset-max", 35, "--transient", 8, "--precursor", 10]


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run("synth", "--seed", 7, "--out", out, *SYNTH_SMALL) == 0
    return str(out)


@pytest.fixture(scope="module")
def trained(tmp_path_factory, small_dataset):
    """Tiny trained checkpoints shared by the CLI tests."""
    out = tmp_path_factory.mktemp("models")
    manifest = os.path.join(small_dataset, "manifest.json")
    assert run("train-anticipator", "--data", manifest, "--out", out / "ant",
               "--epochs", 1, "--hidden", 8, "--stride", 4) == 0
    assert run("train-classifier", "--data", manifest, "--out", out / "cls",
               "--epochs", 1, "--stride", 4) == 0
    return {"anticipator": str(out / "ant" / "anticipator.json"),
            "classifier": str(out / "cls" / "classifier.json"),
            "manifest": manifest}


def test_synth_same_seed_identical_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--seed", 7, "--out", a, *SYNTH_SMALL) == 0
    assert run("synth", "--seed", 7, "--out", b, *SYNTH_SMALL) == 0
    ha, hb = file_hashes(a), file_hashes(b)
    assert ha and ha == hb


def test_synth_writes_manifest_and_sequences(small_dataset):
    manifest = json.load(open(os.path.join(small_dataset, "manifest.json")))
    assert manifest["schema"] == 1
    assert len(manifest["files"]) == 3
    assert manifest["keypoint_order"][0] == "left_shoulder"
    assert os.path.exists(os.path.join(small_dataset, "run_metadata.json"))


def test_preprocess_writes_report(tmp_path, small_dataset):
    out = tmp_path / "clean"
    code = run("preprocess", "--data", os.path.join(small_dataset, "manifest.json"),
               "--out", out)
    assert code == 0
    report = json.load(open(out / "preprocess_report.json"))
    assert "filled_total" in report and "sequences" in report
    assert os.path.exists(out / "manifest.json")


def test_train_anticipator_artifacts(trained, tmp_path):
    assert os.path.exists(trained["anticipator"])
    out_dir = os.path.dirname(trained["anticipator"])
    assert os.path.exists(os.path.join(out_dir, "loss_curve.csv"))
    assert os.path.exists(os.path.join(out_dir, "loss_curve.png"))
    meta = json.load(open(os.path.join(out_dir, "run_metadata.json")))
    assert meta["command"] == "train-anticipator"
    assert meta["config"]["hidden"] == 8


def test_train_classifier_artifacts(trained):
    out_dir = os.path.dirname(trained["classifier"])
    metrics = json.load(open(os.path.join(out_dir, "metrics.json")))
    assert "accuracy" in metrics and "confusion" in metrics
    assert "holdout" in metrics


def test_evaluate_without_checkpoints_fails(tmp_path, trained):
    code = run("evaluate", "--data", trained["manifest"], "--out", tmp_path / "e")
    assert code != 0


def test_evaluate_writes_reports_and_figures(tmp_path, trained):
    out = tmp_path / "eval"
    code = run("evaluate", "--data", trained["manifest"], "--out", out,
               "--anticipator", trained["anticipator"],
               "--classifier", trained["classifier"],
               "--baseline", f"0={trained['classifier']}",
               "--baseline", f"3={trained['classifier']}",
               "--horizons", "0,3", "--split", "all")
    assert code == 0
    table2 = json.load(open(out / "anticipation_error.json"))
    assert [r["horizon_frames"] for r in table2["per_horizon"]] == [0, 3]
    assert table2["per_horizon"][0]["mean"] == 0.0
    acc = json.load(open(out / "accuracy_decoupled.json"))
    assert acc["mode"] == "decoupled"
    assert "literature_current_state_reference" in acc
    for name in ["anticipation_error.csv", "anticipation_error.png",
                 "accuracy_dgnn_only.csv", "accuracy.png"]:
        assert os.path.exists(out / name), name


def test_anticipate_on_minimal_file(tmp_path, trained, small_dataset):
    # a bare 15-frame jsonl file is enough for one anticipation result
    src = json.load(open(trained["manifest"]))
    seq_path = os.path.join(small_dataset, src["files"][0])
    lines = open(seq_path).read().splitlines()[:15]
    mini = tmp_path / "mini.jsonl"
    mini.write_text("\n".join(lines) + "\n")
    out = tmp_path / "ant"
    code = run("anticipate", "--data", mini, "--out", out,
               "--anticipator", trained["anticipator"],
               "--classifier", trained["classifier"],
               "--horizons", "0,3,6,9,12,15", "--no-preprocess")
    assert code == 0
    doc = json.load(open(out / "anticipation.json"))
    assert set(doc["horizons"]) == {"0", "3", "6", "9", "12", "15"}
    assert doc["at_frame"] == 14


def test_anticipate_fails_on_missing_checkpoint(tmp_path, trained):
    code = run("anticipate", "--data", trained["manifest"], "--out", tmp_path / "x",
               "--anticipator", "/nonexistent.json",
               "--classifier", trained["classifier"])
    assert code != 0


def test_transient_exports(tmp_path, trained):
    out = tmp_path / "tr"
    code = run("transient", "--data", trained["manifest"], "--out", out,
               "--classifier", trained["classifier"],
               "--anticipator", trained["anticipator"], "--stride", 2)
    assert code == 0
    header = open(out / "transient_trajectory.csv").readline().strip().split(",")
    assert header == ["frame", "u", "v", "true_label", "predicted_label",
                      "is_anticipated", "dist_stable", "dist_transient",
                      "dist_fall", "speed", "heading"]
    rows = open(out / "transient_trajectory.csv").read().splitlines()[1:]
    assert any(r.split(",")[5] == "1" for r in rows)      # anticipated points present
    assert os.path.exists(out / "transient_map.png")
    assert os.path.exists(out / "transient_points.csv")
    tmap = json.load(open(out / "transient_map.json"))
    assert len(tmap["axes"]) == 2 and len(tmap["centroids"]) == 3


def test_config_file_merging_and_unknown_key_rejection(tmp_path):
    cfg = tmp_path / "synth.cfg"
    cfg.write_text("stable=2\nfalls=1\nframes=60\nonset_min=30\nonset_max=35\n"
                   "transient=8\nprecursor=10\nseed=3\n")
    out = tmp_path / "d1"
    assert run("synth", "--config", cfg, "--out", out) == 0
    meta = json.load(open(out / "run_metadata.json"))
    assert meta["config"]["seed"] == 3
    # explicit flag beats the file
    out2 = tmp_path / "d2"
    assert run("synth", "--config", cfg, "--out", out2, "--seed", 9) == 0
    assert json.load(open(out2 / "run_metadata.json"))["config"]["seed"] == 9
    # unknown keys rejected
    bad = tmp_path / "bad.cfg"
    bad.write_text("stable=2\nbogus_key=1\n")
    assert run("synth", "--config", bad, "--out", tmp_path / "d3") != 0


def test_missing_required_option_fails(tmp_path):
    assert run("synth") != 0


def test_train_determinism_bitwise(tmp_path, small_dataset):
    manifest = os.path.join(small_dataset, "manifest.json")
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("train-anticipator", "--data", manifest, "--out", out,
                   "--epochs", 1, "--hidden", 8, "--stride", 6, "--seed", 5) == 0
    ha, hb = file_hashes(a), file_hashes(b)
    assert ha and ha == hb
