"""End-to-end stage wiring used by the command-line interface.

Each function reads and writes conventional artifact layouts:

    features_dir/   features.json, eeg/<id>.nspf (window stats), mfcc/<id>.nspf
    reduced_dir/    reduce.json, kpca.npz or autoencoder.npz, eeg/<id>.nspf

Splits are recomputed from (dataset, seed) wherever needed, so stages
agree as long as they are run with the same seed.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import datakit, distill, nn, reduce
from .eeg import N_WINDOW_FEATURES, extract_eeg_features, select_channels
from .errors import MissingArtifactError
from .filters import apply_filter, design_bandpass, design_notch, window_for_rate
from .seeding import substream
from .speech import MfccConfig, extract_mfcc
from .types import FeatureSequence, LabeledExample

BANDPASS_LOW_HZ = 0.1
BANDPASS_HIGH_HZ = 70.0
BANDPASS_ORDER = 4
NOTCH_HZ = 60.0
NOTCH_QUALITY = 30.0

# Fit-side row cap for the kernel matrix; past this the eigendecomposition
# dominates runtime without buying accuracy on these features.
MAX_KPCA_FIT_ROWS = 2048


def featurize(dataset_dir, out_dir, channels=None) -> dict:
    """Filter EEG, extract window statistics and MFCCs for every trial."""
    info, manifests = datakit.scan_dataset(dataset_dir)
    out = Path(out_dir)
    (out / "eeg").mkdir(parents=True, exist_ok=True)
    (out / "mfcc").mkdir(parents=True, exist_ok=True)

    eeg_rate = manifests[0].eeg_rate_hz
    bandpass = design_bandpass(BANDPASS_LOW_HZ, BANDPASS_HIGH_HZ, BANDPASS_ORDER, eeg_rate)
    notch = design_notch(NOTCH_HZ, eeg_rate, NOTCH_QUALITY)
    window = window_for_rate(eeg_rate)
    mfcc_cfg = MfccConfig(sample_rate_hz=manifests[0].audio_rate_hz)

    eeg_dim = mfcc_dim = None
    used_channels = None
    for manifest in manifests:
        eeg_sig, audio_sig = datakit.load_trial(dataset_dir, manifest)
        if channels:
            eeg_sig = select_channels(eeg_sig, channels)
        used_channels = eeg_sig.channel_names
        filtered = apply_filter(notch, apply_filter(bandpass, eeg_sig))
        eeg_feats = extract_eeg_features(filtered, window)
        mfcc_feats = extract_mfcc(audio_sig, mfcc_cfg)
        datakit.save_matrix(out / "eeg" / f"{manifest.trial_id}.nspf", eeg_feats.data)
        datakit.save_matrix(out / "mfcc" / f"{manifest.trial_id}.nspf", mfcc_feats.data)
        eeg_dim, mfcc_dim = eeg_feats.dim, mfcc_feats.dim

    meta = {
        "dataset_tag": info.get("tag", "unknown"),
        "channels": list(used_channels or ()),
        "eeg_dim": eeg_dim,
        "mfcc_dim": mfcc_dim,
        "feature_rate_hz": eeg_rate / window.hop,
        "n_trials": len(manifests),
    }
    (out / "features.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return meta


def compute_split(dataset_dir, seed: int) -> datakit.SplitAssignment:
    _, manifests = datakit.scan_dataset(dataset_dir)
    by_class: dict[str, list[str]] = {}
    for m in manifests:
        by_class.setdefault(m.label, []).append(m.trial_id)
    return datakit.split_dataset(by_class, seed)


def _features_meta(features_dir) -> dict:
    meta_path = Path(features_dir) / "features.json"
    if not meta_path.is_file():
        raise MissingArtifactError(f"no feature extraction found at {features_dir} (run the features stage first)")
    return json.loads(meta_path.read_text(encoding="utf-8"))


def _load_feature(features_dir, kind: str, trial_id: str) -> np.ndarray:
    path = Path(features_dir) / kind / f"{trial_id}.nspf"
    if not path.is_file():
        raise MissingArtifactError(f"missing {kind} features for trial {trial_id!r} at {path}")
    return datakit.load_matrix(path)


def fit_reducer(
    dataset_dir,
    features_dir,
    out_dir,
    method: str = "kpca",
    n_components: int = 39,
    epochs: int = 200,
    seed: int = 42,
    max_fit_rows: int = MAX_KPCA_FIT_ROWS,
) -> dict:
    """Fit the reducer on training-split EEG rows, transform every trial.

    Output rows get velocity/acceleration deltas appended, so the written
    dimensionality is 3x the component count.
    """
    if method not in ("kpca", "autoencoder"):
        raise ValueError(f"method must be 'kpca' or 'autoencoder', got {method!r}")
    meta = _features_meta(features_dir)
    rate = float(meta["feature_rate_hz"])
    _, manifests = datakit.scan_dataset(dataset_dir)
    split = compute_split(dataset_dir, seed)

    train_ids = split.ids("train")
    rows = np.vstack([_load_feature(features_dir, "eeg", tid) for tid in train_ids])
    if rows.shape[0] > max_fit_rows:
        keep = substream(seed, "reduce-subsample").choice(rows.shape[0], max_fit_rows, replace=False)
        keep.sort()
        rows = rows[keep]

    out = Path(out_dir)
    (out / "eeg").mkdir(parents=True, exist_ok=True)

    if method == "kpca":
        model = reduce.kpca_fit(rows, n_components)
        datakit.save_kpca(out / "kpca.npz", model, {"seed": seed, "fit_rows": rows.shape[0]})
        transform = lambda arr: reduce.kpca_transform(model, arr)
        model_file = "kpca.npz"
    else:
        model = reduce.autoencoder_fit(rows, n_components=n_components, epochs=epochs, seed=seed)
        datakit.save_autoencoder(out / "autoencoder.npz", model, {"seed": seed, "fit_rows": rows.shape[0]})
        transform = lambda arr: reduce.autoencoder_encode(model, arr)
        model_file = "autoencoder.npz"

    out_dim = None
    for manifest in manifests:
        feats = _load_feature(features_dir, "eeg", manifest.trial_id)
        seq = FeatureSequence(transform(feats), rate, "eeg")
        stacked = reduce.stack_time_deltas(seq)
        datakit.save_matrix(out / "eeg" / f"{manifest.trial_id}.nspf", stacked.data)
        out_dim = stacked.dim

    result = {
        "method": method,
        "n_components": n_components,
        "out_dim": out_dim,
        "seed": seed,
        "fit_rows": int(rows.shape[0]),
        "model_file": model_file,
    }
    (out / "reduce.json").write_text(json.dumps(result, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return result


def assemble(
    dataset_dir,
    features_dir,
    mode: str,
    split: datakit.SplitAssignment,
    reduced_dir=None,
) -> tuple[tuple[str, ...], dict[str, list[LabeledExample]]]:
    """Build labeled example lists for each split in a given feature mode.

    Fused examples truncate both streams to the shorter sequence before
    concatenating along the feature axis.
    """
    if mode not in ("mfcc", "eeg", "fused"):
        raise ValueError(f"mode must be mfcc, eeg or fused, got {mode!r}")
    if mode in ("eeg", "fused"):
        if reduced_dir is None or not (Path(reduced_dir) / "reduce.json").is_file():
            raise MissingArtifactError(f"mode {mode!r} needs a reduced-features directory (run the reduce stage first)")
    _features_meta(features_dir)

    classes = split.labels
    label_to_idx = {label: i for i, label in enumerate(classes)}
    out: dict[str, list[LabeledExample]] = {}
    for part in ("train", "val", "test"):
        examples = []
        section = getattr(split, part)
        for label in sorted(section):
            for tid in section[label]:
                if mode == "mfcc":
                    arr = _load_feature(features_dir, "mfcc", tid)
                elif mode == "eeg":
                    arr = _load_feature(reduced_dir, "eeg", tid)
                else:
                    eeg_arr = _load_feature(reduced_dir, "eeg", tid)
                    mfcc_arr = _load_feature(features_dir, "mfcc", tid)
                    steps = min(eeg_arr.shape[0], mfcc_arr.shape[0])
                    arr = np.hstack([eeg_arr[:steps], mfcc_arr[:steps]])
                examples.append(LabeledExample(tid, arr, label_to_idx[label]))
        out[part] = examples
    return classes, out


def train_classifier(
    splits: dict[str, list[LabeledExample]],
    classes: tuple[str, ...],
    hidden: int = 32,
    dense: int = 16,
    pooling: str = "average",
    dropout_rate: float = 0.2,
    epochs: int = 60,
    learning_rate: float = 0.001,
    seed: int = 42,
):
    """Init + train + evaluate; returns (model, history, accuracy dict)."""
    model = nn.init_model(
        input_dim=splits["train"][0].features.shape[1],
        n_classes=len(classes),
        hidden=hidden,
        dense=dense,
        pooling=pooling,
        dropout_rate=dropout_rate,
        seed=seed,
    )
    cfg = nn.TrainConfig(learning_rate=learning_rate, epochs=epochs, seed=seed)
    model, history = nn.train(splits["train"], splits["val"], model, cfg)
    accs = {
        "train_acc": nn.evaluate(model, splits["train"]),
        "val_acc": nn.evaluate(model, splits["val"]),
        "test_acc": nn.evaluate(model, splits["test"]),
    }
    return model, history, accs


def save_history(path, history) -> None:
    payload = [asdict(rec) for rec in history]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_teacher(model_path):
    path = Path(model_path)
    if not path.is_file():
        raise MissingArtifactError(f"no teacher checkpoint at {path} (train one first)")
    return datakit.load_model(path)


def _ablate_worker(args):
    channel, splits, n_classes, hidden, dense, epochs, learning_rate, seed = args
    model = nn.init_model(
        input_dim=splits["train"][0].features.shape[1],
        n_classes=n_classes,
        hidden=hidden,
        dense=dense,
        pooling="average",
        dropout_rate=0.2,
        seed=seed,
    )
    cfg = nn.TrainConfig(learning_rate=learning_rate, epochs=epochs, seed=seed)
    model, _ = nn.train(splits["train"], splits["val"], model, cfg)
    return channel, nn.evaluate(model, splits["test"])


def ablate_channels(
    dataset_dir,
    features_dir,
    hidden: int = 16,
    dense: int = 8,
    epochs: int = 15,
    learning_rate: float = 0.001,
    seed: int = 42,
    jobs: int = 1,
) -> list[tuple[str, float]]:
    """Train one small classifier per channel on that channel's five
    window statistics; returns (channel, test accuracy) sorted best-first.

    Ties break alphabetically so the ranking is deterministic.
    """
    meta = _features_meta(features_dir)
    channels = meta["channels"]
    split = compute_split(dataset_dir, seed)
    classes, splits = assemble(dataset_dir, features_dir, "mfcc", split)  # ids/labels only
    # Swap in per-channel slices of the raw EEG window statistics.
    raw = {tid: _load_feature(features_dir, "eeg", tid) for tid in split.all_ids()}

    tasks = []
    for c, channel in enumerate(channels):
        lo, hi = N_WINDOW_FEATURES * c, N_WINDOW_FEATURES * (c + 1)
        channel_splits = {
            part: [LabeledExample(ex.example_id, raw[ex.example_id][:, lo:hi], ex.label) for ex in exs]
            for part, exs in splits.items()
        }
        tasks.append((channel, channel_splits, len(classes), hidden, dense, epochs, learning_rate, seed))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ablate_worker, tasks))
    else:
        results = [_ablate_worker(t) for t in tasks]
    return sorted(results, key=lambda item: (-item[1], item[0]))
