"""Command-line front end.

Subcommands: synth, preprocess, train-anticipator, train-classifier,
evaluate, anticipate, transient.  Every command takes ``--out`` and writes
its artifacts atomically plus a ``run_metadata.json`` describing the resolved
configuration.  Options may also come from ``--config`` (JSON object or
``key=value`` lines, keys matching the long option names with ``-`` as ``_``);
explicit flags win over file values, unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .anticipator import AnticipatorModel, TrainConfig, train_anticipator
from .classifier import (ClassifierTrainConfig, DgnnModel, build_labeled_windows,
                         classification_metrics, train_classifier)
from .data import (DatasetManifest, load_manifest, load_sequence, load_sequences,
                   save_dataset, split)
from .errors import ConfigurationError, FallcastError
from .figures import (save_accuracy, save_anticipation_error, save_loss_curve,
                      save_transient_map)
from .optim import LrSchedule, write_atomic
from .pipeline import (HORIZONS, anticipate_fall, evaluate_accuracy,
                       evaluate_anticipation)
from .preprocess import PreprocessConfig, preprocess_sequence
from .skeleton import GAIT_FALL, relative_series
from .synth import SynthConfig, synth_gait
from .transient import (class_centroids, fit_pca, nearest_centroid, project,
                        trajectory_metrics)
from .anticipator import WINDOW


# ---------------------------------------------------------------------------
# option plumbing


def _load_config_file(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return doc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        try:
            out[key.strip()] = json.loads(value.strip())
        except json.JSONDecodeError:
            out[key.strip()] = value.strip()
    return out


def _resolve_options(defaults: dict, passed: dict) -> dict:
    """defaults <- config file <- explicit flags, rejecting unknown file keys."""
    cfg = dict(defaults)
    config_path = passed.pop("config", None)
    if config_path:
        file_cfg = _load_config_file(config_path)
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise ConfigurationError(
                f"{config_path}: unknown keys {unknown}; known: {sorted(defaults)}")
        cfg.update(file_cfg)
    cfg.update(passed)
    missing = [k for k, v in cfg.items() if v is _REQUIRED]
    if missing:
        raise ConfigurationError(f"missing required options: {sorted(missing)}")
    return cfg


class _Required:
    def __repr__(self):
        return "<required>"


_REQUIRED = _Required()


def _write_json(path: str, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    write_atomic(path, buf.getvalue())


def _write_metadata(out_dir: str, command: str, cfg: dict) -> str:
    # paths of the run itself stay out so reruns produce identical bytes
    clean = {k: v for k, v in cfg.items()
             if k not in ("out", "config") and not isinstance(v, _Required)}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":"), default=str)
    meta = {
        "command": command,
        "config": clean,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "versions": {"fallcast": __version__, "numpy": np.__version__},
    }
    path = os.path.join(out_dir, "run_metadata.json")
    _write_json(path, meta)
    return path


def _emit(path: str) -> None:
    print(f"wrote {path}")


def _parse_horizons(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(h) for h in text)
    return tuple(int(p) for p in str(text).split(",") if p.strip() != "")


def _schedule(cfg: dict) -> LrSchedule:
    return LrSchedule(initial=cfg["lr"], interval=cfg["lr_interval"],
                      factor=cfg["lr_factor"], max_epochs=max(cfg["epochs"], 1))


def _load_dataset(path: str):
    manifest = load_manifest(path)
    return manifest, load_sequences(manifest)


def _select_split(sequences, which: str, ratio: float, seed: int):
    if which == "all" or len(sequences) < 2:
        return sequences
    train, test = split(sequences, ratio, seed)
    return {"train": train, "test": test}[which]


# ---------------------------------------------------------------------------
# subcommands


def run_synth(cfg: dict) -> None:
    out = cfg["out"]
    synth_cfg = SynthConfig(
        stable_sequences=cfg["stable"], fall_sequences=cfg["falls"],
        frames=cfg["frames"], fps=cfg["fps"], gait_hz=cfg["gait_hz"],
        amplitude=cfg["amplitude"], onset_min=cfg["onset_min"],
        onset_max=cfg["onset_max"], transient_frames=cfg["transient"],
        precursor_frames=cfg["precursor"], noise_std=cfg["noise"], seed=cfg["seed"])
    sequences = synth_gait(synth_cfg)
    manifest_path = save_dataset(sequences, out, fps=cfg["fps"], source="synthetic")
    _emit(manifest_path)
    _emit(_write_metadata(out, "synth", cfg))


def run_preprocess(cfg: dict) -> None:
    out = cfg["out"]
    manifest, sequences = _load_dataset(cfg["data"])
    pp = PreprocessConfig(velocity_threshold=cfg["threshold"],
                          cutoff_hz=cfg["cutoff"], sample_rate_hz=manifest.fps)
    cleaned, reports = [], {}
    for seq in sequences:
        clean, report = preprocess_sequence(seq, pp)
        cleaned.append(clean)
        reports[seq.name] = report.to_dict()
    manifest_path = save_dataset(cleaned, out, fps=manifest.fps,
                                 source=f"{manifest.source}+preprocessed")
    _emit(manifest_path)
    report_path = os.path.join(out, "preprocess_report.json")
    _write_json(report_path, {"sequences": reports,
                              "filled_total": sum(r["filled_total"] for r in reports.values()),
                              "corrected_total": sum(r["corrected_total"] for r in reports.values())})
    _emit(report_path)
    _emit(_write_metadata(out, "preprocess", cfg))


def _loss_curve_rows(history) -> list[list]:
    rows = [["epoch", "lr", "train_loss", "test_loss"]]
    for row in history:
        rows.append([row["epoch"], row["lr"], row["train_loss"],
                     row.get("test_loss", float("nan"))])
    return rows


def run_train_anticipator(cfg: dict) -> None:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    _, sequences = _load_dataset(cfg["data"])
    if len(sequences) >= 2:
        train_seqs, test_seqs = split(sequences, cfg["split_ratio"], cfg["split_seed"])
    else:
        train_seqs, test_seqs = sequences, None
    init_model = AnticipatorModel.load(cfg["init"]) if cfg["init"] else None
    config = TrainConfig(batch_size=cfg["batch"], epochs=cfg["epochs"],
                         schedule=_schedule(cfg), seed=cfg["seed"],
                         window_stride=cfg["stride"])
    model, history = train_anticipator(train_seqs, config, test_seqs=test_seqs,
                                       init_model=init_model, hidden_size=cfg["hidden"])
    ckpt = os.path.join(out, "anticipator.json")
    model.save(ckpt)
    _emit(ckpt)
    curve = os.path.join(out, "loss_curve.csv")
    _write_csv(curve, _loss_curve_rows(history))
    _emit(curve)
    fig = os.path.join(out, "loss_curve.png")
    save_loss_curve(history, fig, title="Anticipator training loss")
    _emit(fig)
    _emit(_write_metadata(out, "train-anticipator", cfg))


def run_train_classifier(cfg: dict) -> None:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    _, sequences = _load_dataset(cfg["data"])
    if len(sequences) >= 2:
        train_seqs, test_seqs = split(sequences, cfg["split_ratio"], cfg["split_seed"])
    else:
        train_seqs, test_seqs = sequences, None
    config = ClassifierTrainConfig(offset=cfg["offset"], batch_size=cfg["batch"],
                                   epochs=cfg["epochs"], schedule=_schedule(cfg),
                                   seed=cfg["seed"], freeze_graph=cfg["freeze_graph"],
                                   window_stride=cfg["stride"])
    model, metrics = train_classifier(train_seqs, config)
    if test_seqs:
        wins, labels = build_labeled_windows(test_seqs, cfg["offset"])
        pred = model.predict_proba(wins).argmax(axis=1)
        metrics["holdout"] = classification_metrics(labels, pred)
    history = metrics.pop("history")
    ckpt = os.path.join(out, "classifier.json")
    model.save(ckpt)
    _emit(ckpt)
    metrics_path = os.path.join(out, "metrics.json")
    _write_json(metrics_path, metrics)
    _emit(metrics_path)
    curve = os.path.join(out, "loss_curve.csv")
    _write_csv(curve, [["epoch", "lr", "train_loss"]]
               + [[r["epoch"], r["lr"], r["train_loss"]] for r in history])
    _emit(curve)
    fig = os.path.join(out, "loss_curve.png")
    save_loss_curve(history, fig, title=f"Classifier training loss (offset {cfg['offset']})")
    _emit(fig)
    _emit(_write_metadata(out, "train-classifier", cfg))


def _parse_baselines(entries) -> dict:
    table = {}
    for entry in entries or []:
        if "=" not in entry:
            raise ConfigurationError(f"--baseline needs OFFSET=PATH, got {entry!r}")
        offset, path = entry.split("=", 1)
        table[int(offset)] = DgnnModel.load(path)
    return table


def run_evaluate(cfg: dict) -> None:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    if not (cfg["anticipator"] or cfg["baseline"]):
        raise ConfigurationError(
            "evaluate needs --anticipator (anticipation error / decoupled accuracy) "
            "and/or --baseline offsets (dgnn-only accuracy)")
    _, sequences = _load_dataset(cfg["data"])
    test_seqs = _select_split(sequences, cfg["split"], cfg["split_ratio"], cfg["split_seed"])
    horizons = _parse_horizons(cfg["horizons"])
    stride = cfg["stride"]
    allow = cfg["allow_any_fps"]

    accuracy_reports = []
    if cfg["anticipator"]:
        anticipator = AnticipatorModel.load(cfg["anticipator"])
        report = evaluate_anticipation(anticipator, test_seqs, horizons,
                                       stride=stride, allow_any_fps=allow)
        _write_json(os.path.join(out, "anticipation_error.json"), report.to_dict())
        _write_csv(os.path.join(out, "anticipation_error.csv"), report.csv_rows())
        save_anticipation_error(report, os.path.join(out, "anticipation_error.png"))
        for name in ("anticipation_error.json", "anticipation_error.csv",
                     "anticipation_error.png"):
            _emit(os.path.join(out, name))
        if cfg["classifier"]:
            classifier = DgnnModel.load(cfg["classifier"])
            acc = evaluate_accuracy(test_seqs, horizons, mode="decoupled",
                                    anticipator=anticipator, classifier=classifier,
                                    stride=stride, allow_any_fps=allow)
            accuracy_reports.append(acc)
            _write_json(os.path.join(out, "accuracy_decoupled.json"), acc.to_dict())
            _write_csv(os.path.join(out, "accuracy_decoupled.csv"), acc.csv_rows())
            _emit(os.path.join(out, "accuracy_decoupled.json"))
            _emit(os.path.join(out, "accuracy_decoupled.csv"))
    if cfg["baseline"]:
        baselines = _parse_baselines(cfg["baseline"])
        acc = evaluate_accuracy(test_seqs, horizons, mode="dgnn_only",
                                baseline_classifiers=baselines,
                                stride=stride, allow_any_fps=allow)
        accuracy_reports.append(acc)
        _write_json(os.path.join(out, "accuracy_dgnn_only.json"), acc.to_dict())
        _write_csv(os.path.join(out, "accuracy_dgnn_only.csv"), acc.csv_rows())
        _emit(os.path.join(out, "accuracy_dgnn_only.json"))
        _emit(os.path.join(out, "accuracy_dgnn_only.csv"))
    if accuracy_reports:
        save_accuracy(accuracy_reports, os.path.join(out, "accuracy.png"))
        _emit(os.path.join(out, "accuracy.png"))
    _emit(_write_metadata(out, "evaluate", cfg))


def _load_any_sequences(path: str, fps_default: float = 30.0):
    if path.endswith(".jsonl"):
        return [load_sequence(path, fps=fps_default)]
    _, sequences = _load_dataset(path)
    return sequences


def _pick_sequence(sequences, selector):
    if isinstance(selector, int) or str(selector).lstrip("-").isdigit():
        return sequences[int(selector)]
    for seq in sequences:
        if seq.name == selector:
            return seq
    raise ConfigurationError(f"no sequence named {selector!r}")


def run_anticipate(cfg: dict) -> None:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    anticipator = AnticipatorModel.load(cfg["anticipator"])
    classifier = DgnnModel.load(cfg["classifier"])
    sequences = _load_any_sequences(cfg["data"], fps_default=cfg["fps"])
    seq = _pick_sequence(sequences, cfg["sequence"])
    if not cfg["no_preprocess"]:
        seq, _report = preprocess_sequence(seq)
    at = cfg["at"] if cfg["at"] >= 0 else len(seq) - 1
    result = anticipate_fall(anticipator, classifier, seq,
                             _parse_horizons(cfg["horizons"]), at=at,
                             allow_any_fps=cfg["allow_any_fps"])
    path = os.path.join(out, "anticipation.json")
    _write_json(path, result.to_dict())
    _emit(path)
    _emit(_write_metadata(out, "anticipate", cfg))


def run_transient(cfg: dict) -> None:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    _, sequences = _load_dataset(cfg["data"])
    if any(seq.labels is None for seq in sequences):
        raise ConfigurationError("transient analysis needs labeled sequences")
    stride = cfg["stride"]
    windows, labels = build_labeled_windows(sequences, offset=0, stride=stride)
    flat = windows.reshape(len(windows), -1)
    tmap = fit_pca(flat)
    points = project(tmap, flat)
    tmap.centroids = class_centroids(points, labels)

    classifier = DgnnModel.load(cfg["classifier"]) if cfg["classifier"] else None
    if classifier is not None:
        predicted = classifier.predict_proba(windows).argmax(axis=1)
        predicted_via = "classifier"
    else:
        predicted = nearest_centroid(points, tmap.centroids)
        predicted_via = "nearest-centroid"

    map_path = os.path.join(out, "transient_map.json")
    _write_json(map_path, tmap.to_dict())
    _emit(map_path)
    rows = [["u", "v", "true_label", "predicted_label"]]
    rows += [[points[i, 0], points[i, 1], int(labels[i]), int(predicted[i])]
             for i in range(len(points))]
    points_path = os.path.join(out, "transient_points.csv")
    _write_csv(points_path, rows)
    _emit(points_path)

    # trajectory of the selected sequence, observed then anticipated
    selector = cfg["sequence"]
    if selector == "":
        fall_named = [s for s in sequences
                      if s.labels is not None and np.any(s.labels == GAIT_FALL)]
        seq = fall_named[0] if fall_named else sequences[0]
    else:
        seq = _pick_sequence(sequences, selector)
    rel = relative_series(seq)
    obs_windows = np.stack([rel[t - WINDOW + 1:t + 1]
                            for t in range(WINDOW - 1, len(rel))])
    obs_points = project(tmap, obs_windows.reshape(len(obs_windows), -1))

    anticipated_points = np.empty((0, 2))
    n_future = 0
    if cfg["anticipator"]:
        anticipator = AnticipatorModel.load(cfg["anticipator"])
        at = cfg["at"] if cfg["at"] >= 0 else len(seq) - 1
        window = rel[None, at - WINDOW + 1:at + 1]
        future = anticipator.rollout_batch(window, WINDOW)[0]
        mixed = []
        for h in range(1, WINDOW + 1):
            tail = rel[at - WINDOW + 1 + h:at + 1]
            mixed.append(np.concatenate([tail, future[:h]], axis=0))
        mixed = np.stack(mixed)
        anticipated_points = project(tmap, mixed.reshape(len(mixed), -1))
        n_future = len(anticipated_points)
        if classifier is not None:
            future_pred = classifier.predict_proba(mixed).argmax(axis=1)
        else:
            future_pred = nearest_centroid(anticipated_points, tmap.centroids)

    track = np.concatenate([obs_points, anticipated_points], axis=0)
    metrics = trajectory_metrics(track, tmap.centroids)
    if classifier is not None:
        obs_pred = classifier.predict_proba(obs_windows).argmax(axis=1)
    else:
        obs_pred = nearest_centroid(obs_points, tmap.centroids)

    rows = [["frame", "u", "v", "true_label", "predicted_label", "is_anticipated",
             "dist_stable", "dist_transient", "dist_fall", "speed", "heading"]]
    n_obs = len(obs_points)
    for i in range(len(track)):
        if i < n_obs:
            frame = WINDOW - 1 + i
            true_label = int(seq.labels[frame])
            pred_label = int(obs_pred[i])
            anticipated = 0
        else:
            j = i - n_obs
            frame = (cfg["at"] if cfg["at"] >= 0 else len(seq) - 1) + 1 + j
            true_label = int(seq.labels[frame]) if frame < len(seq) else ""
            pred_label = int(future_pred[j])
            anticipated = 1
        metric_row = metrics.centroid_distance[i]
        rows.append([frame, track[i, 0], track[i, 1], true_label, pred_label,
                     anticipated, metric_row[0], metric_row[1], metric_row[2],
                     metrics.speed[i], metrics.heading[i]])
    traj_path = os.path.join(out, "transient_trajectory.csv")
    _write_csv(traj_path, rows)
    _emit(traj_path)

    fig_path = os.path.join(out, "transient_map.png")
    save_transient_map(points, labels, tmap.centroids, fig_path,
                       trajectory=obs_points,
                       anticipated=anticipated_points if n_future else None)
    _emit(fig_path)
    meta_cfg = dict(cfg)
    meta_cfg["predicted_via"] = predicted_via
    _emit(_write_metadata(out, "transient", meta_cfg))


# ---------------------------------------------------------------------------
# parser


def _add_common(sub, *with_options):
    sub.add_argument("--config", default=argparse.SUPPRESS,
                     help="JSON or key=value option file; flags override it")
    for opt in with_options:
        opt(sub)


def _opt(sub, name, type_=str, help_="", action=None, nargs=None):
    kwargs = {"default": argparse.SUPPRESS, "help": help_}
    if action:
        kwargs["action"] = action
    else:
        kwargs["type"] = type_
        if nargs:
            kwargs["nargs"] = nargs
    sub.add_argument(name, **kwargs)


_TRAIN_COMMON = {
    "batch": 32, "seed": 0, "stride": 1, "lr": 1e-3, "lr_interval": 16,
    "lr_factor": 0.5, "split_ratio": 0.8, "split_seed": 0,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fallcast",
        description="Fall anticipation: LSTM motion prediction feeding a "
                    "directed-graph gait classifier.")
    parser.add_argument("--version", action="version", version=f"fallcast {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("synth", help="generate the synthetic gait dataset")
    _add_common(s)
    for name, t in [("--out", str), ("--seed", int), ("--stable", int), ("--falls", int),
                    ("--frames", int), ("--fps", float), ("--gait-hz", float),
                    ("--amplitude", float), ("--onset-min", int), ("--onset-max", int),
                    ("--transient", int), ("--precursor", int), ("--noise", float)]:
        _opt(s, name, t)

    s = subs.add_parser("preprocess", help="run the keypoint cleanup chain over a dataset")
    _add_common(s)
    for name, t in [("--data", str), ("--out", str), ("--threshold", float),
                    ("--cutoff", float)]:
        _opt(s, name, t)

    s = subs.add_parser("train-anticipator", help="train the LSTM movement predictor")
    _add_common(s)
    for name, t in [("--data", str), ("--out", str), ("--epochs", int), ("--batch", int),
                    ("--hidden", int), ("--seed", int), ("--stride", int), ("--lr", float),
                    ("--lr-interval", int), ("--lr-factor", float), ("--init", str),
                    ("--split-ratio", float), ("--split-seed", int)]:
        _opt(s, name, t)

    s = subs.add_parser("train-classifier", help="train the DGNN gait classifier")
    _add_common(s)
    for name, t in [("--data", str), ("--out", str), ("--offset", int), ("--epochs", int),
                    ("--batch", int), ("--seed", int), ("--stride", int), ("--lr", float),
                    ("--lr-interval", int), ("--lr-factor", float),
                    ("--split-ratio", float), ("--split-seed", int)]:
        _opt(s, name, t)
    s.add_argument("--freeze-graph", action="store_true", default=argparse.SUPPRESS,
                   help="keep the incidence matrices at their initialization")

    s = subs.add_parser("evaluate", help="anticipation-error and accuracy protocols")
    _add_common(s)
    for name, t in [("--data", str), ("--out", str), ("--anticipator", str),
                    ("--classifier", str), ("--horizons", str), ("--stride", int),
                    ("--split", str), ("--split-ratio", float), ("--split-seed", int)]:
        _opt(s, name, t)
    s.add_argument("--baseline", action="append", default=argparse.SUPPRESS,
                   metavar="OFFSET=CKPT", help="per-offset classifier for dgnn-only mode")
    s.add_argument("--allow-any-fps", action="store_true", default=argparse.SUPPRESS)

    s = subs.add_parser("anticipate", help="run anticipation over one sequence")
    _add_common(s)
    for name, t in [("--data", str), ("--out", str), ("--anticipator", str),
                    ("--classifier", str), ("--sequence", str), ("--at", int),
                    ("--horizons", str), ("--fps", float)]:
        _opt(s, name, t)
    s.add_argument("--no-preprocess", action="store_true", default=argparse.SUPPRESS)
    s.add_argument("--allow-any-fps", action="store_true", default=argparse.SUPPRESS)

    s = subs.add_parser("transient", help="PCA transient analysis exports")
    _add_common(s)
    for name, t in [("--data", str), ("--out", str), ("--classifier", str),
                    ("--anticipator", str), ("--sequence", str), ("--at", int),
                    ("--stride", int)]:
        _opt(s, name, t)

    return parser


_DEFAULTS = {
    "synth": {"out": _REQUIRED, "seed": 0, "stable": 44, "falls": 28, "frames": 120,
              "fps": 30.0, "gait_hz": 1.1, "amplitude": 0.24, "onset_min": 45,
              "onset_max": 70, "transient": 18, "precursor": 24, "noise": 0.006},
    "preprocess": {"data": _REQUIRED, "out": _REQUIRED, "threshold": 0.3, "cutoff": 10.0},
    "train-anticipator": {"data": _REQUIRED, "out": _REQUIRED, "epochs": 300,
                          "hidden": 512, "init": "", **_TRAIN_COMMON},
    "train-classifier": {"data": _REQUIRED, "out": _REQUIRED, "epochs": 300,
                         "offset": 0, "freeze_graph": False, **_TRAIN_COMMON},
    "evaluate": {"data": _REQUIRED, "out": _REQUIRED, "anticipator": "",
                 "classifier": "", "baseline": [], "horizons": "0,3,6,9,12,15",
                 "stride": 1, "split": "test", "split_ratio": 0.8, "split_seed": 0,
                 "allow_any_fps": False},
    "anticipate": {"data": _REQUIRED, "out": _REQUIRED, "anticipator": _REQUIRED,
                   "classifier": _REQUIRED, "sequence": "0", "at": -1,
                   "horizons": "0,3,6,9,12,15", "fps": 30.0, "no_preprocess": False,
                   "allow_any_fps": False},
    "transient": {"data": _REQUIRED, "out": _REQUIRED, "classifier": "",
                  "anticipator": "", "sequence": "", "at": -1, "stride": 1},
}

_RUNNERS = {
    "synth": run_synth,
    "preprocess": run_preprocess,
    "train-anticipator": run_train_anticipator,
    "train-classifier": run_train_classifier,
    "evaluate": run_evaluate,
    "anticipate": run_anticipate,
    "transient": run_transient,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    passed = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        cfg = _resolve_options(_DEFAULTS[command], passed)
        _RUNNERS[command](cfg)
    except (FallcastError, ValueError, OSError) as exc:
        print(f"fallcast {command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
