"""Dataset handling: file formats, synthetic trials, splits, and metrics.

On-disk layout of a dataset directory:

    dataset.txt              key: value summary of the whole set
    manifests/<trial>.txt    one key: value manifest per trial
    eeg/<trial>.nspf         float32 matrix, samples x channels
    audio/<trial>.nspf       float32 matrix, samples x 1

The matrix container ("NSPF") is a 16-byte header -- magic "NSPF",
version u16, rows u32, cols u32, reserved u16, all little-endian --
followed by row-major little-endian float32 payload. Fitted models are
stored as uncompressed npz archives with a JSON metadata entry; both
formats are byte-deterministic for fixed content.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from zipfile import BadZipFile

import numpy as np

from . import nn, reduce
from .distill import SoftTargetSet
from .eeg import CHANNELS_31
from .errors import (
    ClassTooSmallError,
    CorruptFileError,
    DimensionMismatchError,
)
from .seeding import substream
from .types import MultichannelSignal

_NSPF_HEADER = struct.Struct("<4sHIIH")
_NSPF_MAGIC = b"NSPF"
_NSPF_VERSION = 1

FEATURE_MODES = ("mfcc", "eeg", "fused", "student")


# ---------------------------------------------------------------------------
# Matrix container


def save_matrix(path, arr) -> None:
    """Write a 2-D array as float32 NSPF."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"NSPF stores 2-D matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("refusing to store non-finite values")
    payload = np.ascontiguousarray(a, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_NSPF_HEADER.pack(_NSPF_MAGIC, _NSPF_VERSION, a.shape[0], a.shape[1], 0))
        fh.write(payload.tobytes(order="C"))


def load_matrix(path) -> np.ndarray:
    """Read an NSPF matrix back as float64, validating the header strictly."""
    raw = Path(path).read_bytes()
    if len(raw) < _NSPF_HEADER.size:
        raise CorruptFileError(f"{path}: truncated header", offset=len(raw))
    magic, version, rows, cols, _ = _NSPF_HEADER.unpack_from(raw)
    if magic != _NSPF_MAGIC:
        raise CorruptFileError(f"{path}: bad magic {magic!r}", offset=0)
    if version != _NSPF_VERSION:
        raise CorruptFileError(f"{path}: unsupported version {version}", offset=4)
    expected = _NSPF_HEADER.size + rows * cols * 4
    if len(raw) != expected:
        raise CorruptFileError(
            f"{path}: payload holds {len(raw) - _NSPF_HEADER.size} bytes, "
            f"header promises {rows}x{cols} ({expected - _NSPF_HEADER.size})",
            offset=min(len(raw), expected),
        )
    mat = np.frombuffer(raw, dtype="<f4", offset=_NSPF_HEADER.size).reshape(rows, cols)
    return mat.astype(np.float64)


# ---------------------------------------------------------------------------
# key: value text files


def save_kv(path, pairs: dict) -> None:
    lines = [f"{key}: {value}\n" for key, value in pairs.items()]
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_kv(path) -> dict[str, str]:
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise CorruptFileError(f"{path}:{lineno}: expected 'key: value', got {line!r}")
        out[key.strip()] = value.strip()
    return out


def _require(kv: dict[str, str], key: str, path) -> str:
    if key not in kv:
        raise CorruptFileError(f"{path}: missing required key {key!r}")
    return kv[key]


# ---------------------------------------------------------------------------
# Trial manifests


@dataclass(frozen=True)
class TrialManifest:
    trial_id: str
    label: str
    noise: bool
    eeg_file: str
    audio_file: str
    channels: tuple[str, ...]
    eeg_rate_hz: float
    audio_rate_hz: float


def save_manifest(path, m: TrialManifest) -> None:
    save_kv(
        path,
        {
            "trial_id": m.trial_id,
            "label": m.label,
            "noise": "true" if m.noise else "false",
            "eeg_file": m.eeg_file,
            "audio_file": m.audio_file,
            "channels": ",".join(m.channels),
            "eeg_rate_hz": f"{m.eeg_rate_hz:g}",
            "audio_rate_hz": f"{m.audio_rate_hz:g}",
        },
    )


def load_manifest(path) -> TrialManifest:
    kv = load_kv(path)
    return TrialManifest(
        trial_id=_require(kv, "trial_id", path),
        label=_require(kv, "label", path),
        noise=_require(kv, "noise", path).lower() == "true",
        eeg_file=_require(kv, "eeg_file", path),
        audio_file=_require(kv, "audio_file", path),
        channels=tuple(c for c in _require(kv, "channels", path).split(",") if c),
        eeg_rate_hz=float(_require(kv, "eeg_rate_hz", path)),
        audio_rate_hz=float(_require(kv, "audio_rate_hz", path)),
    )


def scan_dataset(dataset_dir) -> tuple[dict[str, str], list[TrialManifest]]:
    """Dataset summary plus all trial manifests, sorted by trial id."""
    root = Path(dataset_dir)
    info_path = root / "dataset.txt"
    if not info_path.is_file():
        raise FileNotFoundError(f"{root} does not look like a dataset (no dataset.txt)")
    info = load_kv(info_path)
    manifest_dir = root / "manifests"
    if not manifest_dir.is_dir():
        raise CorruptFileError(f"{root}: missing manifests/ directory")
    manifests = [load_manifest(p) for p in sorted(manifest_dir.glob("*.txt"))]
    if not manifests:
        raise CorruptFileError(f"{root}: no trial manifests found")
    return info, manifests


def load_trial(dataset_dir, manifest: TrialManifest) -> tuple[MultichannelSignal, MultichannelSignal]:
    """Load one trial's EEG and audio, checking shapes against the manifest."""
    root = Path(dataset_dir)
    eeg_mat = load_matrix(root / manifest.eeg_file)
    if eeg_mat.shape[1] != len(manifest.channels):
        raise DimensionMismatchError(
            f"{manifest.trial_id}: EEG file has {eeg_mat.shape[1]} channels, manifest lists {len(manifest.channels)}"
        )
    audio_mat = load_matrix(root / manifest.audio_file)
    if audio_mat.shape[1] != 1:
        raise DimensionMismatchError(f"{manifest.trial_id}: audio must be mono, got {audio_mat.shape[1]} channels")
    eeg = MultichannelSignal(eeg_mat, manifest.eeg_rate_hz, manifest.channels)
    audio = MultichannelSignal(audio_mat, manifest.audio_rate_hz)
    return eeg, audio


# ---------------------------------------------------------------------------
# Synthetic trials

_DEFAULT_EEG_FREQS = (6.0, 11.0, 17.0, 23.0, 29.0, 37.0, 43.0, 53.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic paired EEG/audio dataset.

    Each class gets a signature EEG frequency (phase-randomized per
    channel and trial) and an audio tone complex on its own fundamental.
    EEG and audio noise are drawn from independent substreams, so
    changing the speech SNR never alters the EEG bytes for a fixed seed.
    """

    tag: str = "synth"
    class_names: tuple[str, ...] = ("yes", "no", "left", "right")
    trials_per_class: int = 50
    n_channels: int = 31
    duration_s: float = 0.5
    eeg_rate_hz: float = 1000.0
    audio_rate_hz: float = 16000.0
    eeg_snr_db: float = 10.0
    speech_snr_db: float = 20.0
    noise_condition: bool = False
    seed: int = 42
    class_freqs_hz: tuple[float, ...] | None = None
    audio_f0_hz: tuple[float, ...] | None = None
    signal_channels: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise ValueError("need at least two classes")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")
        if self.trials_per_class < 1:
            raise ValueError(f"trials_per_class must be >= 1, got {self.trials_per_class}")
        if not (1 <= self.n_channels <= len(CHANNELS_31)):
            raise ValueError(f"n_channels must lie in [1, {len(CHANNELS_31)}], got {self.n_channels}")
        if self.duration_s < 0.15:
            raise ValueError("trials shorter than 0.15 s cannot fill the analysis windows")

    @property
    def channels(self) -> tuple[str, ...]:
        return CHANNELS_31[: self.n_channels]

    def eeg_freqs(self) -> tuple[float, ...]:
        if self.class_freqs_hz is not None:
            freqs = self.class_freqs_hz
        else:
            base = list(_DEFAULT_EEG_FREQS)
            while len(base) < len(self.class_names):
                base.append(base[-1] + 8.0)
            freqs = tuple(base[: len(self.class_names)])
        if len(freqs) != len(self.class_names):
            raise ValueError(f"{len(freqs)} signature frequencies for {len(self.class_names)} classes")
        return tuple(freqs)

    def audio_f0s(self) -> tuple[float, ...]:
        if self.audio_f0_hz is not None:
            f0s = self.audio_f0_hz
        else:
            f0s = tuple(250.0 * 1.6**k for k in range(len(self.class_names)))
        if len(f0s) != len(self.class_names):
            raise ValueError(f"{len(f0s)} audio fundamentals for {len(self.class_names)} classes")
        return tuple(f0s)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _synth_eeg(spec: SyntheticSpec, trial_id: str, freq: float) -> np.ndarray:
    n = int(round(spec.duration_s * spec.eeg_rate_hz))
    t = np.arange(n) / spec.eeg_rate_hz
    rng = substream(spec.seed, "synth-eeg", trial_id)
    phases = rng.uniform(0.0, 2.0 * np.pi, spec.n_channels)
    noise = rng.standard_normal((n, spec.n_channels))

    carriers = set(spec.signal_channels) if spec.signal_channels is not None else set(spec.channels)
    signal = np.zeros((n, spec.n_channels))
    for c, name in enumerate(spec.channels):
        if name in carriers:
            signal[:, c] = np.sin(2.0 * np.pi * freq * t + phases[c])
    sigma = np.sqrt(0.5) * 10.0 ** (-spec.eeg_snr_db / 20.0)
    return signal + sigma * noise


def _synth_audio(spec: SyntheticSpec, trial_id: str, f0: float) -> np.ndarray:
    n = int(round(spec.duration_s * spec.audio_rate_hz))
    t = np.arange(n) / spec.audio_rate_hz
    rng = substream(spec.seed, "synth-audio", trial_id)
    harm_phases = rng.uniform(0.0, 2.0 * np.pi, 3)
    interferer_freqs = rng.uniform(150.0, 3000.0, 4)
    interferer_phases = rng.uniform(0.0, 2.0 * np.pi, 4)
    white = rng.standard_normal(n)

    nyquist = spec.audio_rate_hz / 2.0
    tone = np.zeros(n)
    for h in range(3):
        f = (h + 1) * f0
        if f < nyquist:
            tone += 0.6**h * np.sin(2.0 * np.pi * f * t + harm_phases[h])
    tone *= 0.1 / _rms(tone)

    # Music-like interference: a few loud random tones plus a white floor.
    interference = np.zeros(n)
    for m in range(4):
        interference += np.sin(2.0 * np.pi * interferer_freqs[m] * t + interferer_phases[m]) / (m + 1)
    mix = 0.8 * interference / _rms(interference) + 0.2 * white
    noise = mix * (0.1 * 10.0 ** (-spec.speech_snr_db / 20.0) / _rms(mix))
    return (tone + noise)[:, None]


def generate_synthetic(spec: SyntheticSpec, out_dir) -> list[TrialManifest]:
    """Write a full synthetic dataset; returns the manifests in trial order."""
    if spec.signal_channels is not None:
        unknown = set(spec.signal_channels) - set(spec.channels)
        if unknown:
            raise ValueError(f"signal channels {sorted(unknown)} not in the montage prefix")
    root = Path(out_dir)
    for sub in ("manifests", "eeg", "audio"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    freqs = spec.eeg_freqs()
    f0s = spec.audio_f0s()
    manifests = []
    for k, label in enumerate(spec.class_names):
        for i in range(spec.trials_per_class):
            trial_id = f"{label}_{i:04d}"
            eeg = _synth_eeg(spec, trial_id, freqs[k])
            audio = _synth_audio(spec, trial_id, f0s[k])
            manifest = TrialManifest(
                trial_id=trial_id,
                label=label,
                noise=spec.noise_condition,
                eeg_file=f"eeg/{trial_id}.nspf",
                audio_file=f"audio/{trial_id}.nspf",
                channels=spec.channels,
                eeg_rate_hz=spec.eeg_rate_hz,
                audio_rate_hz=spec.audio_rate_hz,
            )
            save_matrix(root / manifest.eeg_file, eeg)
            save_matrix(root / manifest.audio_file, audio)
            save_manifest(root / "manifests" / f"{trial_id}.txt", manifest)
            manifests.append(manifest)

    save_kv(
        root / "dataset.txt",
        {
            "tag": spec.tag,
            "classes": ",".join(spec.class_names),
            "trials_per_class": spec.trials_per_class,
            "n_channels": spec.n_channels,
            "duration_s": f"{spec.duration_s:g}",
            "eeg_rate_hz": f"{spec.eeg_rate_hz:g}",
            "audio_rate_hz": f"{spec.audio_rate_hz:g}",
            "eeg_snr_db": f"{spec.eeg_snr_db:g}",
            "speech_snr_db": f"{spec.speech_snr_db:g}",
            "noise": "true" if spec.noise_condition else "false",
            "seed": spec.seed,
            "class_freqs_hz": ",".join(f"{f:g}" for f in freqs),
            "audio_f0_hz": ",".join(f"{f:g}" for f in f0s),
            "signal_channels": ",".join(spec.signal_channels) if spec.signal_channels else "all",
        },
    )
    return manifests


# ---------------------------------------------------------------------------
# Splits


@dataclass(frozen=True)
class SplitAssignment:
    """Per-class trial-id lists for the three splits."""

    train: dict[str, tuple[str, ...]]
    val: dict[str, tuple[str, ...]]
    test: dict[str, tuple[str, ...]]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.train))

    def counts(self, label: str) -> tuple[int, int, int]:
        return len(self.train[label]), len(self.val[label]), len(self.test[label])

    def ids(self, split: str) -> list[str]:
        part = getattr(self, split)
        return [tid for label in sorted(part) for tid in part[label]]

    def all_ids(self) -> list[str]:
        return self.ids("train") + self.ids("val") + self.ids("test")


def split_counts(n: int) -> tuple[int, int, int]:
    """(train, validation, test) sizes for a class of n trials.

    Train takes floor(0.64 n), test floor(0.20 n), validation the rest.
    Integer arithmetic avoids float rounding near the boundaries.
    """
    n_train = (64 * n) // 100
    n_test = (20 * n) // 100
    return n_train, n - n_train - n_test, n_test


def split_dataset(ids_by_class: dict[str, Sequence[str]], seed: int) -> SplitAssignment:
    """Shuffle each class independently and cut it train/val/test.

    The shuffle stream is keyed by (seed, class label), so adding a class
    does not move any other class's trials between splits.
    """
    train: dict[str, tuple[str, ...]] = {}
    val: dict[str, tuple[str, ...]] = {}
    test: dict[str, tuple[str, ...]] = {}
    for label in sorted(ids_by_class):
        ids = sorted(ids_by_class[label])
        n = len(ids)
        n_train, n_val, n_test = split_counts(n)
        if min(n_train, n_val, n_test) < 1:
            raise ClassTooSmallError(f"class {label!r} has {n} trials; need at least 5 to fill all splits")
        perm = substream(seed, "split", label).permutation(n)
        shuffled = [ids[j] for j in perm]
        train[label] = tuple(shuffled[:n_train])
        val[label] = tuple(shuffled[n_train : n_train + n_val])
        test[label] = tuple(shuffled[n_train + n_val :])
    return SplitAssignment(train=train, val=val, test=test)


def save_split(path, split: SplitAssignment) -> None:
    payload = {name: {k: list(v) for k, v in getattr(split, name).items()} for name in ("train", "val", "test")}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_split(path) -> SplitAssignment:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return SplitAssignment(
        train={k: tuple(v) for k, v in payload["train"].items()},
        val={k: tuple(v) for k, v in payload["val"].items()},
        test={k: tuple(v) for k, v in payload["test"].items()},
    )


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class MetricsRecord:
    experiment_id: str
    feature_mode: str
    dataset_tag: str
    train_acc: float
    val_acc: float
    test_acc: float
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"feature_mode must be one of {FEATURE_MODES}, got {self.feature_mode!r}")
        for name in ("train_acc", "val_acc", "test_acc"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def save_record(path, rec: MetricsRecord) -> None:
    payload = {
        "experiment_id": rec.experiment_id,
        "feature_mode": rec.feature_mode,
        "dataset_tag": rec.dataset_tag,
        "train_acc": rec.train_acc,
        "val_acc": rec.val_acc,
        "test_acc": rec.test_acc,
        "config": rec.config,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_record(path) -> MetricsRecord:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return MetricsRecord(**payload)


def accuracy_table(records: Sequence[MetricsRecord], metric: str = "test_acc") -> str:
    """Fixed-width text table: dataset tags down, feature modes across.

    The best value in each row is starred. With duplicate (tag, mode)
    pairs the last record wins. Empty input yields an empty string.
    """
    if not records:
        return ""
    cells: dict[tuple[str, str], float] = {}
    for rec in records:
        cells[(rec.dataset_tag, rec.feature_mode)] = getattr(rec, metric)
    tags = sorted({tag for tag, _ in cells})
    modes = [m for m in FEATURE_MODES if any((tag, m) in cells for tag in tags)]

    tag_width = max(len("dataset"), *(len(t) for t in tags)) + 2
    col_width = 10
    lines = ["dataset".ljust(tag_width) + "".join(m.ljust(col_width) for m in modes)]
    for tag in tags:
        present = {m: cells[(tag, m)] for m in modes if (tag, m) in cells}
        best = max(present.values()) if present else None
        row = tag.ljust(tag_width)
        flagged = False
        for m in modes:
            if m not in present:
                row += "-".ljust(col_width)
                continue
            v = present[m]
            mark = "*" if (not flagged and v == best) else ""
            flagged = flagged or bool(mark)
            row += f"{v:.4f}{mark}".ljust(col_width)
        lines.append(row)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Model containers (npz with a JSON metadata entry)


def _save_npz(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def _load_npz(path):
    try:
        with np.load(path, allow_pickle=False) as npz:
            arrays = {name: npz[name] for name in npz.files if name != "__meta__"}
            if "__meta__" not in npz.files:
                raise CorruptFileError(f"{path}: missing metadata entry")
            meta = json.loads(str(npz["__meta__"][()]))
    except (BadZipFile, OSError, ValueError) as exc:
        raise CorruptFileError(f"{path}: not a readable model container ({exc})") from None
    return arrays, meta


def save_model(path, m: nn.ModelParams, meta: dict | None = None) -> None:
    full_meta = dict(meta or {})
    full_meta["kind"] = "gru-classifier"
    full_meta["pooling"] = m.pooling
    full_meta["dropout_rate"] = m.dropout_rate
    _save_npz(path, m.tensors(), full_meta)


def load_model(path) -> tuple[nn.ModelParams, dict]:
    arrays, meta = _load_npz(path)
    if meta.get("kind") != "gru-classifier":
        raise CorruptFileError(f"{path}: container holds {meta.get('kind')!r}, not a classifier")
    gru = nn.GruParams(
        w_z=arrays["gru.w_z"], u_z=arrays["gru.u_z"], b_z=arrays["gru.b_z"],
        w_r=arrays["gru.w_r"], u_r=arrays["gru.u_r"], b_r=arrays["gru.b_r"],
        w_h=arrays["gru.w_h"], u_h=arrays["gru.u_h"], b_h=arrays["gru.b_h"],
    )
    model = nn.ModelParams(
        gru=gru,
        dense_w=arrays["dense_w"], dense_b=arrays["dense_b"],
        out_w=arrays["out_w"], out_b=arrays["out_b"],
        pooling=meta["pooling"], dropout_rate=float(meta["dropout_rate"]),
    )
    return model, meta


def save_kpca(path, model: reduce.KpcaModel, meta: dict | None = None) -> None:
    full_meta = dict(meta or {})
    full_meta.update(kind="kpca", degree=model.degree, offset=model.offset,
                     kernel_grand_mean=model.kernel_grand_mean)
    arrays = {
        "x_fit": model.x_fit,
        "mean": model.standardizer.mean,
        "scale": model.standardizer.scale,
        "eigenvalues": model.eigenvalues,
        "alphas": model.alphas,
        "kernel_col_means": model.kernel_col_means,
        "train_scores": model.train_scores,
    }
    _save_npz(path, arrays, full_meta)


def load_kpca(path) -> tuple[reduce.KpcaModel, dict]:
    arrays, meta = _load_npz(path)
    if meta.get("kind") != "kpca":
        raise CorruptFileError(f"{path}: container holds {meta.get('kind')!r}, not a kpca model")
    model = reduce.KpcaModel(
        x_fit=arrays["x_fit"],
        standardizer=reduce.Standardizer(arrays["mean"], arrays["scale"]),
        degree=int(meta["degree"]),
        offset=float(meta["offset"]),
        eigenvalues=arrays["eigenvalues"],
        alphas=arrays["alphas"],
        kernel_col_means=arrays["kernel_col_means"],
        kernel_grand_mean=float(meta["kernel_grand_mean"]),
        train_scores=arrays["train_scores"],
    )
    return model, meta


def save_autoencoder(path, model: reduce.AutoencoderModel, meta: dict | None = None) -> None:
    full_meta = dict(meta or {})
    full_meta["kind"] = "autoencoder"
    arrays = dict(model.weights)
    arrays["mean"] = model.standardizer.mean
    arrays["scale"] = model.standardizer.scale
    arrays["loss_history"] = np.asarray(model.loss_history)
    _save_npz(path, arrays, full_meta)


def load_autoencoder(path) -> tuple[reduce.AutoencoderModel, dict]:
    arrays, meta = _load_npz(path)
    if meta.get("kind") != "autoencoder":
        raise CorruptFileError(f"{path}: container holds {meta.get('kind')!r}, not an autoencoder")
    weights = {k: arrays[k] for k in ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")}
    model = reduce.AutoencoderModel(
        weights=weights,
        standardizer=reduce.Standardizer(arrays["mean"], arrays["scale"]),
        loss_history=list(arrays["loss_history"]),
    )
    return model, meta


def save_soft_targets(path, targets: SoftTargetSet, meta: dict | None = None) -> None:
    full_meta = dict(meta or {})
    full_meta["kind"] = "soft-targets"
    ids = sorted(targets.logits)
    arrays = {
        "ids": np.array(ids),
        "logits": np.stack([targets.logits[i] for i in ids]) if ids else np.zeros((0, 0)),
    }
    _save_npz(path, arrays, full_meta)


def load_soft_targets(path) -> tuple[SoftTargetSet, dict]:
    arrays, meta = _load_npz(path)
    if meta.get("kind") != "soft-targets":
        raise CorruptFileError(f"{path}: container holds {meta.get('kind')!r}, not soft targets")
    ids = [str(i) for i in arrays["ids"]]
    logits = arrays["logits"]
    return SoftTargetSet({i: logits[k].copy() for k, i in enumerate(ids)}), meta
