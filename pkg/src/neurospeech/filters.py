"""IIR filter design, application, and signal framing.

Filters are stored as cascades of second-order sections (biquads) so
high-order designs stay numerically stable at low normalized cutoffs.
Filtering is causal (single forward pass, direct form II transposed),
matching an online acquisition setting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import (
    FilterInstabilityError,
    InvalidFrequencyError,
    NonFiniteOutputError,
    TooShortSignalError,
)
from .types import MultichannelSignal


@dataclass(frozen=True)
class IirFilter:
    """Cascade of biquads in scipy SOS layout: rows [b0 b1 b2 a0 a1 a2], a0 == 1."""

    sos: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.sos, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[1] != 6:
            raise ValueError(f"SOS array must have shape (n_sections, 6), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("SOS coefficients must be finite")
        if not np.allclose(arr[:, 3], 1.0):
            raise ValueError("each section must be normalized so a0 == 1")
        object.__setattr__(self, "sos", arr)
        radius = self.max_pole_radius()
        if radius >= 1.0:
            raise FilterInstabilityError(f"pole radius {radius:.6f} is not inside the unit circle")

    @classmethod
    def from_sections(cls, sections) -> "IirFilter":
        """Build from (b0, b1, b2, a1, a2) tuples; a0 is implicitly 1."""
        rows = [(b0, b1, b2, 1.0, a1, a2) for (b0, b1, b2, a1, a2) in sections]
        return cls(np.asarray(rows, dtype=np.float64))

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def max_pole_radius(self) -> float:
        radius = 0.0
        for row in self.sos:
            poles = np.roots([1.0, row[4], row[5]])
            if poles.size:
                radius = max(radius, float(np.max(np.abs(poles))))
        return radius


def identity_filter() -> IirFilter:
    """Single pass-through section; useful as a neutral element in tests."""
    return IirFilter.from_sections([(1.0, 0.0, 0.0, 0.0, 0.0)])


def design_bandpass(low_hz: float, high_hz: float, order: int = 4, fs_hz: float = 1000.0) -> IirFilter:
    """Butterworth bandpass of the given total order as an SOS cascade.

    ``order`` counts the full bandpass order (must be even and >= 2); the
    underlying lowpass prototype has order // 2 poles, so order 4 yields
    two biquad sections.
    """
    nyquist = fs_hz / 2.0
    if not (0.0 < low_hz < high_hz < nyquist):
        raise InvalidFrequencyError(
            f"need 0 < low < high < Nyquist, got low={low_hz}, high={high_hz}, fs={fs_hz}"
        )
    if order < 2 or order % 2 != 0:
        raise ValueError(f"bandpass order must be even and >= 2, got {order}")
    sos = sps.butter(order // 2, [low_hz, high_hz], btype="bandpass", fs=fs_hz, output="sos")
    return IirFilter(sos)


def design_notch(center_hz: float, fs_hz: float, quality: float = 30.0) -> IirFilter:
    """Single-section notch; quality factor sets the rejection bandwidth center/Q."""
    nyquist = fs_hz / 2.0
    if not (0.0 < center_hz < nyquist):
        raise InvalidFrequencyError(f"notch center must lie in (0, Nyquist), got {center_hz} at fs={fs_hz}")
    if quality <= 0:
        raise ValueError(f"quality factor must be positive, got {quality}")
    b, a = sps.iirnotch(center_hz, quality, fs=fs_hz)
    b = b / a[0]
    a = a / a[0]
    return IirFilter(np.array([[b[0], b[1], b[2], 1.0, a[1], a[2]]]))


def frequency_response(filt: IirFilter, freqs_hz, fs_hz: float) -> np.ndarray:
    """Complex response H(e^{j 2 pi f / fs}) evaluated directly from coefficients.

    Deliberately does not go through scipy so it can serve as an independent
    check on designed filters: each section's numerator and denominator
    polynomials in z^-1 are evaluated and the sections multiplied.
    """
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
    zinv = np.exp(-2j * np.pi * freqs / fs_hz)
    resp = np.ones_like(zinv)
    for b0, b1, b2, a0, a1, a2 in filt.sos:
        num = b0 + b1 * zinv + b2 * zinv**2
        den = a0 + a1 * zinv + a2 * zinv**2
        resp = resp * num / den
    return resp


def apply_filter(filt: IirFilter, signal: MultichannelSignal) -> MultichannelSignal:
    """Run the cascade causally over every channel (zero initial state)."""
    out = sps.sosfilt(filt.sos, signal.data, axis=0)
    if not np.all(np.isfinite(out)):
        raise NonFiniteOutputError("filter output contains non-finite samples")
    return MultichannelSignal(out, signal.sample_rate_hz, signal.channel_names)


@dataclass(frozen=True)
class WindowSpec:
    """Sliding analysis window in samples."""

    window_len: int
    hop: int

    def __post_init__(self):
        if self.window_len < 1 or self.hop < 1:
            raise ValueError(f"window and hop must be positive, got {self.window_len}, {self.hop}")
        if self.hop > self.window_len:
            raise ValueError(f"hop {self.hop} larger than window {self.window_len}")

    def count(self, n_samples: int) -> int:
        """Number of full windows in a signal of the given length (no padding)."""
        if n_samples < self.window_len:
            return 0
        return (n_samples - self.window_len) // self.hop + 1


def window_for_rate(fs_hz: float, window_s: float = 0.1, hop_s: float = 0.01) -> WindowSpec:
    """100 ms window / 10 ms hop by default, converted to samples."""
    return WindowSpec(int(round(window_s * fs_hz)), int(round(hop_s * fs_hz)))


def frame_signal(signal: MultichannelSignal, spec: WindowSpec) -> np.ndarray:
    """Slice into overlapping windows: (n_windows, window_len, n_channels).

    A trailing partial window is dropped, never padded.
    """
    n = signal.n_samples
    if n < spec.window_len:
        raise TooShortSignalError(f"signal of {n} samples is shorter than one {spec.window_len}-sample window")
    view = np.lib.stride_tricks.sliding_window_view(signal.data, spec.window_len, axis=0)
    return view[:: spec.hop].transpose(0, 2, 1).copy()
