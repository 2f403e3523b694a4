"""Core data containers passed between pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError

# Feature modalities a sequence or trained model can carry.
MODALITIES = ("eeg", "mfcc", "fused")


def _as_2d_float(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D array, got shape {arr.shape}")
    return arr


@dataclass
class MultichannelSignal:
    """Time-domain signal, samples along axis 0, channels along axis 1.

    ``channel_names`` is optional; loaders populate it from the trial
    manifest so channel selection can be done by label.
    """

    data: np.ndarray
    sample_rate_hz: float
    channel_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.data = _as_2d_float(self.data)
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DimensionMismatchError(f"signal needs at least one sample and one channel, got {self.data.shape}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("signal contains non-finite samples")
        if self.channel_names is not None:
            self.channel_names = tuple(self.channel_names)
            if len(self.channel_names) != self.data.shape[1]:
                raise DimensionMismatchError(
                    f"{len(self.channel_names)} channel names for {self.data.shape[1]} channels"
                )

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass
class FeatureSequence:
    """A (timesteps, dims) feature matrix with its frame rate and modality."""

    data: np.ndarray
    rate_hz: float
    modality: str

    def __post_init__(self):
        self.data = _as_2d_float(self.data)
        if self.data.shape[0] < 1:
            raise DimensionMismatchError("feature sequence must have at least one timestep")
        if self.rate_hz <= 0:
            raise ValueError(f"feature rate must be positive, got {self.rate_hz}")
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}, got {self.modality!r}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature sequence contains non-finite values")

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class LabeledExample:
    """One classifier input: a feature matrix plus its integer class label."""

    example_id: str
    features: np.ndarray
    label: int

    def __post_init__(self):
        self.features = _as_2d_float(self.features)
        if self.label < 0:
            raise ValueError(f"label must be a non-negative class index, got {self.label}")


@dataclass
class Dataset:
    """A list of labeled examples plus the class-name vocabulary.

    ``classes[k]`` is the name of label index k.
    """

    examples: list[LabeledExample] = field(default_factory=list)
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        self.classes = tuple(self.classes)
        for ex in self.examples:
            if ex.label >= len(self.classes):
                raise ValueError(f"example {ex.example_id!r} has label {ex.label} but only {len(self.classes)} classes")

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.classes}
        for ex in self.examples:
            counts[self.classes[ex.label]] += 1
        return counts
