"""Command-line harness for the full pipeline.

Stages: synth -> features -> reduce -> train -> (eval | distill | sweep |
ablate) -> report. Paths of produced artifacts go to stdout, one per
line; all diagnostics go to stderr.

Exit codes: 0 success, 2 configuration error, 3 missing or corrupt
dataset, 4 training divergence, 5 missing upstream artifact.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import datakit, distill, nn, pipeline, reduce
from .errors import (
    CorruptFileError,
    DivergenceError,
    MissingArtifactError,
    NeurospeechError,
)

log = logging.getLogger("neurospeech")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_DIVERGED = 4
EXIT_MISSING_ARTIFACT = 5


def _csv(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _floats(text: str) -> list[float]:
    return [float(item) for item in _csv(text)]


def _emit(path) -> None:
    print(str(path))


# ---------------------------------------------------------------------------
# Commands


def cmd_synth(args) -> int:
    spec = datakit.SyntheticSpec(
        tag=args.tag,
        class_names=tuple(_csv(args.classes)),
        trials_per_class=args.per_class,
        n_channels=args.channels,
        duration_s=args.duration,
        eeg_snr_db=args.eeg_snr,
        speech_snr_db=(-5.0 if args.noisy and args.speech_snr is None else (args.speech_snr if args.speech_snr is not None else 20.0)),
        noise_condition=args.noisy,
        seed=args.seed,
        signal_channels=tuple(_csv(args.signal_channels)) if args.signal_channels else None,
    )
    manifests = datakit.generate_synthetic(spec, args.out)
    log.info("wrote %d trials to %s", len(manifests), args.out)
    _emit(Path(args.out) / "dataset.txt")
    return EXIT_OK


def cmd_features(args) -> int:
    channels = tuple(_csv(args.channels)) if args.channels else None
    meta = pipeline.featurize(args.dataset, args.out, channels)
    log.info("eeg dim %s, mfcc dim %s over %s trials", meta["eeg_dim"], meta["mfcc_dim"], meta["n_trials"])
    _emit(Path(args.out) / "features.json")
    return EXIT_OK


def cmd_reduce(args) -> int:
    result = pipeline.fit_reducer(
        args.dataset,
        args.features,
        args.out,
        method=args.method,
        n_components=args.components,
        epochs=args.epochs,
        seed=args.seed,
        max_fit_rows=args.max_fit_rows,
    )
    log.info("%s fit on %d rows -> %d dims", result["method"], result["fit_rows"], result["out_dim"])
    _emit(Path(args.out) / "reduce.json")
    return EXIT_OK


def _experiment_dirs(root) -> tuple[Path, Path]:
    root = Path(root)
    models = root / "models"
    records = root / "records"
    models.mkdir(parents=True, exist_ok=True)
    records.mkdir(parents=True, exist_ok=True)
    return models, records


def _dataset_tag(dataset_dir) -> str:
    info, _ = datakit.scan_dataset(dataset_dir)
    return info.get("tag", "unknown")


def _write_outcome(models_dir, records_dir, name, model, history, accs, meta, record_cfg):
    model_path = models_dir / f"{name}.npz"
    datakit.save_model(model_path, model, meta)
    history_path = models_dir / f"{name}.history.json"
    pipeline.save_history(history_path, history)
    record = datakit.MetricsRecord(
        experiment_id=name,
        feature_mode=meta["feature_mode"],
        dataset_tag=meta["dataset_tag"],
        config=record_cfg,
        **accs,
    )
    record_path = records_dir / f"{name}.json"
    datakit.save_record(record_path, record)
    return model_path, history_path, record_path


def cmd_train(args) -> int:
    split = pipeline.compute_split(args.dataset, args.seed)
    classes, splits = pipeline.assemble(args.dataset, args.features, args.mode, split, args.reduced)
    model, history, accs = pipeline.train_classifier(
        splits,
        classes,
        hidden=args.hidden,
        dense=args.dense,
        pooling=args.pooling,
        dropout_rate=args.dropout,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
    )
    name = args.name or f"{args.mode}-s{args.seed}"
    tag = _dataset_tag(args.dataset)
    meta = {
        "feature_mode": args.mode,
        "dataset_tag": tag,
        "classes": list(classes),
        "seed": args.seed,
        "hidden": args.hidden,
        "dense": args.dense,
        "epochs": args.epochs,
    }
    cfg = {"hidden": args.hidden, "dense": args.dense, "pooling": args.pooling,
           "dropout": args.dropout, "epochs": args.epochs, "lr": args.lr, "seed": args.seed}
    models_dir, records_dir = _experiment_dirs(args.out)
    for path in _write_outcome(models_dir, records_dir, name, model, history, accs, meta, cfg):
        _emit(path)
    log.info("%s: train %.4f val %.4f test %.4f", name, accs["train_acc"], accs["val_acc"], accs["test_acc"])
    return EXIT_OK


def cmd_eval(args) -> int:
    model_path = Path(args.model)
    if not model_path.is_file():
        raise MissingArtifactError(f"no model checkpoint at {model_path}")
    model, meta = datakit.load_model(model_path)
    mode = meta["feature_mode"]
    split = pipeline.compute_split(args.dataset, args.seed)
    classes, splits = pipeline.assemble(args.dataset, args.features, mode, split, args.reduced)
    if list(classes) != list(meta.get("classes", classes)):
        raise ValueError(f"model was trained on classes {meta.get('classes')}, dataset has {list(classes)}")
    accs = {part + "_acc": nn.evaluate(model, splits[part]) for part in ("train", "val", "test")}
    name = args.name or f"{model_path.stem}-eval"
    record = datakit.MetricsRecord(
        experiment_id=name,
        feature_mode=mode,
        dataset_tag=_dataset_tag(args.dataset),
        config={"model": str(model_path), "seed": args.seed},
        **accs,
    )
    _, records_dir = _experiment_dirs(args.out)
    record_path = records_dir / f"{name}.json"
    datakit.save_record(record_path, record)
    _emit(record_path)
    log.info("%s: train %.4f val %.4f test %.4f", name, accs["train_acc"], accs["val_acc"], accs["test_acc"])
    return EXIT_OK


def _distill_inputs(args):
    teacher, teacher_meta = pipeline.load_teacher(args.teacher)
    split = pipeline.compute_split(args.dataset, args.seed)
    teacher_mode = teacher_meta.get("feature_mode", "fused")
    _, teacher_splits = pipeline.assemble(args.dataset, args.features, teacher_mode, split, args.reduced)
    classes, student_splits = pipeline.assemble(args.dataset, args.features, "mfcc", split)
    targets = distill.soft_targets(teacher, teacher_splits["train"])
    return teacher, classes, student_splits, targets


def cmd_distill(args) -> int:
    _, classes, student_splits, targets = _distill_inputs(args)
    dcfg = distill.DistillConfig(temperature=args.temperature, lam=args.lam)
    cfg = nn.TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    model, history = distill.train_student(
        student_splits["train"], student_splits["val"], targets, len(classes), dcfg, cfg,
        hidden=args.hidden, dense=args.dense, dropout_rate=args.dropout,
    )
    accs = {part + "_acc": nn.evaluate(model, student_splits[part]) for part in ("train", "val", "test")}
    name = args.name or f"student-T{args.temperature:g}-L{args.lam:g}-s{args.seed}"
    meta = {
        "feature_mode": "student",
        "dataset_tag": _dataset_tag(args.dataset),
        "classes": list(classes),
        "seed": args.seed,
        "temperature": args.temperature,
        "lam": args.lam,
    }
    record_cfg = {"temperature": args.temperature, "lam": args.lam, "teacher": str(args.teacher),
                  "hidden": args.hidden, "dense": args.dense, "epochs": args.epochs,
                  "lr": args.lr, "seed": args.seed}
    models_dir, records_dir = _experiment_dirs(args.out)
    for path in _write_outcome(models_dir, records_dir, name, model, history, accs, meta, record_cfg):
        _emit(path)
    log.info("%s: train %.4f val %.4f test %.4f", name, accs["train_acc"], accs["val_acc"], accs["test_acc"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    _, classes, student_splits, targets = _distill_inputs(args)
    cfg = nn.TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    result = distill.grid_sweep(
        student_splits["train"], student_splits["val"], student_splits["test"], targets,
        _floats(args.temps), _floats(args.lambdas), len(classes), cfg,
        hidden=args.hidden, dense=args.dense, dropout_rate=args.dropout, jobs=args.jobs,
    )
    tag = _dataset_tag(args.dataset)
    _, records_dir = _experiment_dirs(args.out)
    paths = []
    for cell in result.cells:
        name = f"student-T{cell.temperature:g}-L{cell.lam:g}-s{args.seed}"
        record = datakit.MetricsRecord(
            experiment_id=name,
            feature_mode="student",
            dataset_tag=tag,
            train_acc=cell.train_acc,
            val_acc=cell.val_acc,
            test_acc=cell.test_acc,
            config={"temperature": cell.temperature, "lam": cell.lam, "teacher": str(args.teacher),
                    "epochs": args.epochs, "seed": args.seed},
        )
        path = records_dir / f"{name}.json"
        datakit.save_record(path, record)
        paths.append(path)
    best = result.best
    sweep_payload = {
        "cells": [{"temperature": c.temperature, "lam": c.lam, "train_acc": c.train_acc,
                   "val_acc": c.val_acc, "test_acc": c.test_acc} for c in result.cells],
        "best": {"temperature": best.temperature, "lam": best.lam, "val_acc": best.val_acc,
                 "test_acc": best.test_acc, "index": result.best_index},
        "seed": args.seed,
    }
    sweep_path = Path(args.out) / "sweep.json"
    sweep_path.write_text(json.dumps(sweep_payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    for path in paths:
        _emit(path)
    _emit(sweep_path)
    log.info("best cell T=%g lam=%g: val %.4f test %.4f", best.temperature, best.lam, best.val_acc, best.test_acc)
    return EXIT_OK


def cmd_ablate(args) -> int:
    ranking = pipeline.ablate_channels(
        args.dataset,
        args.features,
        hidden=args.hidden,
        dense=args.dense,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        jobs=args.jobs,
    )
    payload = {
        "ranking": [{"channel": ch, "test_acc": acc} for ch, acc in ranking],
        "seed": args.seed,
        "dataset_tag": _dataset_tag(args.dataset),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ablation.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _emit(path)
    log.info("top channel %s at %.4f", ranking[0][0], ranking[0][1])
    return EXIT_OK


def cmd_report(args) -> int:
    root = Path(args.experiment)
    records_dir = root / "records"
    if not records_dir.is_dir():
        raise MissingArtifactError(f"no records directory under {root}")
    records = [datakit.load_record(p) for p in sorted(records_dir.glob("*.json"))]
    report_dir = root / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    produced = []

    sections = []
    table = datakit.accuracy_table(records)
    if table:
        sections.append("test accuracy by feature mode\n\n" + table)

    sweep_path = root / "sweep.json"
    if sweep_path.is_file():
        sweep = json.loads(sweep_path.read_text(encoding="utf-8"))
        lines = ["temperature  lambda  train_acc  val_acc  test_acc"]
        for cell in sweep["cells"]:
            lines.append(
                f"{cell['temperature']:<11g}  {cell['lam']:<6g}  {cell['train_acc']:<9.4f}  "
                f"{cell['val_acc']:<7.4f}  {cell['test_acc']:.4f}"
            )
        best = sweep["best"]
        lines.append(f"best by validation: T={best['temperature']:g} lambda={best['lam']:g} test={best['test_acc']:.4f}")
        sections.append("distillation grid\n\n" + "\n".join(lines) + "\n")

    tables_path = report_dir / "tables.txt"
    tables_path.write_text("\n".join(sections) if sections else "no records\n", encoding="utf-8")
    produced.append(tables_path)

    models_dir = root / "models"
    if models_dir.is_dir():
        for hist_path in sorted(models_dir.glob("*.history.json")):
            history = json.loads(hist_path.read_text(encoding="utf-8"))
            name = hist_path.name.removesuffix(".history.json")
            csv_path = report_dir / f"accuracy_vs_epoch_{name}.csv"
            rows = ["epoch,train_loss,train_acc,val_acc"]
            rows += [f"{h['epoch']},{h['train_loss']:.6f},{h['train_acc']:.6f},{h['val_acc']:.6f}" for h in history]
            csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
            produced.append(csv_path)

    if args.reduced:
        kpca_path = Path(args.reduced) / "kpca.npz"
        if kpca_path.is_file():
            model, _ = datakit.load_kpca(kpca_path)
            curve = reduce.explained_variance_curve(model)
            csv_path = report_dir / "explained_variance.csv"
            rows = ["component,cumulative_ratio"]
            rows += [f"{i + 1},{v:.8f}" for i, v in enumerate(curve)]
            csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
            produced.append(csv_path)

    ablation_path = root / "ablation.json"
    if ablation_path.is_file():
        ablation = json.loads(ablation_path.read_text(encoding="utf-8"))
        csv_path = report_dir / "channel_contribution.csv"
        rows = ["channel,test_acc"]
        rows += [f"{item['channel']},{item['test_acc']:.6f}" for item in ablation["ranking"]]
        csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        produced.append(csv_path)

    for path in produced:
        _emit(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_common_train_flags(p: argparse.ArgumentParser, hidden=32, dense=16, epochs=60):
    p.add_argument("--hidden", type=int, default=hidden, help="GRU hidden size")
    p.add_argument("--dense", type=int, default=dense, help="dense layer width")
    p.add_argument("--dropout", type=float, default=0.2, help="dense-layer dropout rate")
    p.add_argument("--epochs", type=int, default=epochs, help="training epochs")
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurospeech", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic paired EEG/audio dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--tag", default="synth")
    p.add_argument("--classes", default="yes,no,left,right", help="comma-separated class names")
    p.add_argument("--per-class", type=int, default=50, dest="per_class")
    p.add_argument("--channels", type=int, default=31, help="EEG channel count (montage prefix)")
    p.add_argument("--duration", type=float, default=0.5, help="trial length in seconds")
    p.add_argument("--eeg-snr", type=float, default=10.0, dest="eeg_snr")
    p.add_argument("--speech-snr", type=float, default=None, dest="speech_snr",
                   help="speech SNR in dB (default 20, or -5 with --noisy)")
    p.add_argument("--noisy", action="store_true", help="mark the noise condition and default speech SNR to -5 dB")
    p.add_argument("--signal-channels", default=None, dest="signal_channels",
                   help="restrict the class signature to these channels")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="filter EEG and extract window statistics and MFCCs")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--channels", default=None, help="optional channel subset, comma-separated")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("reduce", help="fit kernel PCA or the autoencoder on training rows")
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("kpca", "autoencoder"), default="kpca")
    p.add_argument("--components", type=int, default=39)
    p.add_argument("--epochs", type=int, default=200, help="autoencoder epochs")
    p.add_argument("--max-fit-rows", type=int, default=pipeline.MAX_KPCA_FIT_ROWS, dest="max_fit_rows")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("train", help="train the GRU classifier on one feature mode")
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--reduced", default=None)
    p.add_argument("--mode", choices=("mfcc", "eeg", "fused"), required=True)
    p.add_argument("--out", required=True, help="experiment directory for models/ and records/")
    p.add_argument("--name", default=None)
    p.add_argument("--pooling", choices=("average", "last"), default="average")
    _add_common_train_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--reduced", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default=None)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("distill", help="train an MFCC student against a teacher checkpoint")
    p.add_argument("--teacher", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--reduced", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default=None)
    p.add_argument("--temperature", type=float, default=2.0)
    p.add_argument("--lam", type=float, default=0.2)
    _add_common_train_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("sweep", help="grid-search distillation temperature and lambda")
    p.add_argument("--teacher", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--reduced", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--temps", default="1,2,5,10")
    p.add_argument("--lambdas", default="0,0.2,0.8,1.0")
    p.add_argument("--jobs", type=int, default=1)
    _add_common_train_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="rank channels by single-channel classification accuracy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_common_train_flags(p, hidden=16, dense=8, epochs=15)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="write accuracy tables and CSV summaries")
    p.add_argument("--experiment", required=True)
    p.add_argument("--reduced", default=None, help="reduced dir for the explained-variance curve")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingArtifactError as exc:
        log.error("%s", exc)
        return EXIT_MISSING_ARTIFACT
    except DivergenceError as exc:
        log.error("training diverged: %s", exc)
        return EXIT_DIVERGED
    except (CorruptFileError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_DATASET
    except (NeurospeechError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


def main_entry() -> None:
    sys.exit(main())
