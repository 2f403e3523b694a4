"""Statistical window features for multichannel EEG.

Each analysis window of each channel is summarized by five statistics:
root-mean-square amplitude, zero-crossing rate, mean, kurtosis, and the
Shannon entropy of the window's power spectrum. Feature vectors are laid
out channel-major: columns [5c, 5c+5) belong to channel c.
"""

from __future__ import annotations

import numpy as np

from .errors import UnknownChannelError, WindowTooShortError
from .filters import WindowSpec, frame_signal
from .types import FeatureSequence, MultichannelSignal

# 31-electrode montage from the extended 10-20 system (32-electrode cap
# with one position used as ground). Order here fixes the feature layout.
CHANNELS_31 = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "FC5", "FC1", "FC2", "FC6",
    "T7", "C3", "Cz", "C4", "T8",
    "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
    "P7", "P3", "Pz", "P4", "P8",
    "PO9", "O1", "Oz", "O2",
)

FEATURE_NAMES = ("rms", "zcr", "mean", "kurtosis", "pse")
N_WINDOW_FEATURES = len(FEATURE_NAMES)

# Below this central second moment a window counts as constant and its
# kurtosis is defined as 0 rather than dividing by ~0.
_VARIANCE_FLOOR = 1e-12


def _stats_block(windows: np.ndarray) -> np.ndarray:
    """Vectorized statistics for a stack of same-length windows.

    windows: (n_windows, window_len) -> (n_windows, 5)
    """
    w = np.asarray(windows, dtype=np.float64)
    n_win, win_len = w.shape

    rms = np.sqrt(np.mean(w * w, axis=1))
    mean = w.mean(axis=1)

    # Zero-crossing rate. A sample exactly at zero carries the previous
    # sample's sign so it never counts as a crossing by itself; a leading
    # zero is treated as positive.
    signs = np.sign(w)
    if np.any(signs == 0.0):
        signs[:, 0] = np.where(signs[:, 0] == 0.0, 1.0, signs[:, 0])
        for j in range(1, win_len):
            col = signs[:, j]
            signs[:, j] = np.where(col == 0.0, signs[:, j - 1], col)
    zcr = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1) / (win_len - 1)

    centered = w - mean[:, None]
    m2 = np.mean(centered * centered, axis=1)
    m4 = np.mean(centered**4, axis=1)
    kurtosis = np.divide(m4, m2 * m2, out=np.zeros(n_win), where=m2 >= _VARIANCE_FLOOR)

    # Power spectral entropy over the one-sided periodogram, natural log.
    power = np.abs(np.fft.rfft(w, axis=1)) ** 2
    total = power.sum(axis=1, keepdims=True)
    p = np.divide(power, total, out=np.zeros_like(power), where=total > 0.0)
    log_p = np.log(np.where(p > 0.0, p, 1.0))
    pse = -np.sum(p * log_p, axis=1)

    return np.column_stack([rms, zcr, mean, kurtosis, pse])


def window_stats(window: np.ndarray) -> np.ndarray:
    """Five summary statistics of one window, ordered as FEATURE_NAMES."""
    w = np.asarray(window, dtype=np.float64).ravel()
    if w.size < 2:
        raise WindowTooShortError(f"need at least 2 samples per window, got {w.size}")
    return _stats_block(w[None, :])[0]


def extract_eeg_features(signal: MultichannelSignal, spec: WindowSpec) -> FeatureSequence:
    """Window statistics for every channel: (n_windows, 5 * n_channels).

    Feature rate is the hop rate (sample_rate / hop).
    """
    frames = frame_signal(signal, spec)  # (T, window_len, C)
    n_win, _, n_ch = frames.shape
    out = np.empty((n_win, N_WINDOW_FEATURES * n_ch))
    for c in range(n_ch):
        out[:, N_WINDOW_FEATURES * c : N_WINDOW_FEATURES * (c + 1)] = _stats_block(frames[:, :, c])
    return FeatureSequence(out, signal.sample_rate_hz / spec.hop, "eeg")


def select_channels(signal: MultichannelSignal, names) -> MultichannelSignal:
    """Restrict a signal to the named channels, in the order given.

    Lookup is case-insensitive so montage variants like "Fc5" match "FC5".
    """
    if signal.channel_names is None:
        raise UnknownChannelError("signal carries no channel labels; cannot select by name")
    lookup = {label.lower(): i for i, label in enumerate(signal.channel_names)}
    indices = []
    canonical = []
    for name in names:
        idx = lookup.get(name.lower())
        if idx is None:
            raise UnknownChannelError(f"unknown channel label {name!r}")
        indices.append(idx)
        canonical.append(signal.channel_names[idx])
    return MultichannelSignal(signal.data[:, indices], signal.sample_rate_hz, tuple(canonical))
