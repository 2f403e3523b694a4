"""Mel-frequency cepstral features for the speech channel.

Per frame: pre-emphasis, Hamming window, power spectrum, triangular mel
filterbank, floored log, orthonormal DCT-II keeping the first 13
coefficients. First and second temporal derivatives are appended to give
the usual 39-dimensional vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import (
    DimensionMismatchError,
    SequenceTooShortError,
    TooShortSignalError,
    WrongFrameLengthError,
    WrongSampleRateError,
)
from .types import FeatureSequence, MultichannelSignal

# Keeps log filterbank energies finite for silent frames.
_LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MfccConfig:
    sample_rate_hz: float = 16000.0
    frame_len_s: float = 0.025
    hop_s: float = 0.010
    n_cepstra: int = 13
    n_mel_filters: int = 26
    fft_size: int = 512
    preemphasis: float = 0.97
    delta_window: int = 2
    f_min_hz: float = 0.0
    f_max_hz: float | None = None  # defaults to Nyquist

    def __post_init__(self):
        if self.frame_samples > self.fft_size:
            raise ValueError(f"fft_size {self.fft_size} smaller than frame of {self.frame_samples} samples")
        if not (0 < self.n_cepstra <= self.n_mel_filters):
            raise ValueError("need 0 < n_cepstra <= n_mel_filters")
        if self.delta_window < 1:
            raise ValueError("delta window must be >= 1")

    @property
    def frame_samples(self) -> int:
        return int(round(self.frame_len_s * self.sample_rate_hz))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_s * self.sample_rate_hz))

    @property
    def f_max(self) -> float:
        return self.sample_rate_hz / 2.0 if self.f_max_hz is None else self.f_max_hz


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """Triangular filters on a mel-spaced grid: (n_mel_filters, fft_size // 2 + 1).

    Filter m rises from grid point m to m+1 and falls to m+2, with the
    grid points mapped to the nearest-below FFT bin.
    """
    n_bins = cfg.fft_size // 2 + 1
    mel_points = np.linspace(hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max), cfg.n_mel_filters + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.floor((cfg.fft_size + 1) * hz_points / cfg.sample_rate_hz).astype(int)
    bins = np.clip(bins, 0, n_bins - 1)

    fb = np.zeros((cfg.n_mel_filters, n_bins))
    for m in range(cfg.n_mel_filters):
        left, center, right = bins[m], bins[m + 1], bins[m + 2]
        for k in range(left, center):
            fb[m, k] = (k - left) / max(center - left, 1)
        for k in range(center, right):
            fb[m, k] = (right - k) / max(right - center, 1)
        if right == center:
            # Degenerate triangle from very narrow low-frequency spacing.
            fb[m, center] = max(fb[m, center], 1.0)
    return fb


def _frame_matrix_to_cepstra(frames: np.ndarray, cfg: MfccConfig, fb: np.ndarray) -> np.ndarray:
    """Cepstra for a stack of raw frames: (n_frames, frame_samples) -> (n_frames, n_cepstra)."""
    emphasized = frames.astype(np.float64).copy()
    emphasized[:, 1:] -= cfg.preemphasis * frames[:, :-1]
    windowed = emphasized * np.hamming(cfg.frame_samples)
    power = np.abs(np.fft.rfft(windowed, cfg.fft_size, axis=1)) ** 2
    energies = power @ fb.T
    log_energies = np.log(np.maximum(energies, _LOG_FLOOR))
    cepstra = sfft.dct(log_energies, type=2, norm="ortho", axis=1)
    return cepstra[:, : cfg.n_cepstra]


def mfcc(frame: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    """Cepstral coefficients of a single raw frame of cfg.frame_samples samples."""
    f = np.asarray(frame, dtype=np.float64).ravel()
    if f.size != cfg.frame_samples:
        raise WrongFrameLengthError(f"expected {cfg.frame_samples} samples per frame, got {f.size}")
    return _frame_matrix_to_cepstra(f[None, :], cfg, mel_filterbank(cfg))[0]


def add_deltas(features: FeatureSequence, delta_window: int = 2) -> FeatureSequence:
    """Append first- and second-order regression deltas along time.

    Delta at step t is sum_n n * (x[t+n] - x[t-n]) / (2 * sum_n n^2) with
    edges clamped (out-of-range steps repeat the boundary row). Output has
    three times the input's dimensionality.
    """
    n = delta_window
    x = features.data
    if x.shape[0] < 2 * n + 1:
        raise SequenceTooShortError(f"need at least {2 * n + 1} steps for delta window {n}, got {x.shape[0]}")

    def regress(block: np.ndarray) -> np.ndarray:
        padded = np.concatenate([np.repeat(block[:1], n, axis=0), block, np.repeat(block[-1:], n, axis=0)])
        t = block.shape[0]
        num = sum(k * (padded[n + k : n + k + t] - padded[n - k : n - k + t]) for k in range(1, n + 1))
        return num / (2.0 * sum(k * k for k in range(1, n + 1)))

    delta = regress(x)
    delta2 = regress(delta)
    return FeatureSequence(np.hstack([x, delta, delta2]), features.rate_hz, features.modality)


def extract_mfcc(signal: MultichannelSignal, cfg: MfccConfig | None = None) -> FeatureSequence:
    """MFCC-with-deltas sequence for a mono audio signal.

    The signal's sample rate must match the config (16 kHz by default),
    where frames are 400 samples with a 160-sample hop, i.e. a 100 Hz
    frame rate.
    """
    cfg = cfg or MfccConfig()
    if signal.sample_rate_hz != cfg.sample_rate_hz:
        raise WrongSampleRateError(f"expected {cfg.sample_rate_hz} Hz audio, got {signal.sample_rate_hz} Hz")
    if signal.n_channels != 1:
        raise DimensionMismatchError(f"audio must be mono, got {signal.n_channels} channels")

    x = signal.data[:, 0]
    frame_len, hop = cfg.frame_samples, cfg.hop_samples
    if x.size < frame_len:
        raise TooShortSignalError(f"audio of {x.size} samples is shorter than one {frame_len}-sample frame")
    n_frames = (x.size - frame_len) // hop + 1
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop][:n_frames]

    base = _frame_matrix_to_cepstra(frames, cfg, mel_filterbank(cfg))
    seq = FeatureSequence(base, cfg.sample_rate_hz / hop, "mfcc")
    return add_deltas(seq, cfg.delta_window)
