import numpy as np
import pytest

from neurospeech.errors import (
    DimensionMismatchError,
    SequenceTooShortError,
    TooShortSignalError,
    WrongFrameLengthError,
    WrongSampleRateError,
)
from neurospeech.speech import (
    MfccConfig,
    add_deltas,
    extract_mfcc,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    mfcc,
)
from neurospeech.types import FeatureSequence, MultichannelSignal


def test_config_defaults():
    cfg = MfccConfig()
    assert cfg.frame_samples == 400
    assert cfg.hop_samples == 160
    assert cfg.f_max == pytest.approx(8000.0)


def test_mel_scale_round_trip_and_monotone():
    freqs = np.array([0.0, 100.0, 700.0, 1000.0, 4000.0, 8000.0])
    mels = hz_to_mel(freqs)
    assert np.all(np.diff(mels) > 0)
    assert np.allclose(mel_to_hz(mels), freqs, rtol=1e-12)
    assert hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0))


def test_filterbank_shape_and_coverage():
    cfg = MfccConfig()
    fb = mel_filterbank(cfg)
    assert fb.shape == (26, 257)
    assert np.all(fb >= 0.0)
    assert np.all(fb.sum(axis=1) > 0.0)
    # interior fft bins are covered by at least one filter
    coverage = fb.sum(axis=0)
    lo = int(np.ceil(300.0 / (16000.0 / 512)))
    hi = int(np.floor(7000.0 / (16000.0 / 512)))
    assert np.all(coverage[lo:hi] > 0.0)


def test_filterbank_peak_positions_monotone():
    fb = mel_filterbank(MfccConfig())
    peaks = fb.argmax(axis=1)
    assert np.all(np.diff(peaks) > 0)


def test_zero_frame_cepstra():
    cfg = MfccConfig()
    c = mfcc(np.zeros(400), cfg)
    assert c.shape == (13,)
    assert c[0] < 0.0
    assert np.allclose(c[1:], 0.0, atol=1e-9)


def test_frame_length_enforced():
    with pytest.raises(WrongFrameLengthError):
        mfcc(np.zeros(399), MfccConfig())


def test_mfcc_finite_on_noise(rng):
    c = mfcc(rng.standard_normal(400), MfccConfig())
    assert c.shape == (13,)
    assert np.all(np.isfinite(c))


def test_deltas_on_ramp():
    t = np.arange(10, dtype=np.float64)
    feats = np.column_stack([t, 2.0 * t])
    seq = add_deltas(FeatureSequence(feats, 100.0, "mfcc"), 2)
    assert seq.rate_hz == 100.0 and seq.modality == "mfcc"
    out = seq.data
    assert out.shape == (10, 6)
    assert np.array_equal(out[:, :2], feats)
    # interior slope of a unit ramp is exactly 1 (2 for the doubled column)
    assert np.allclose(out[2:8, 2], 1.0)
    assert np.allclose(out[2:8, 3], 2.0)
    # clamped edges flatten the regression
    assert out[0, 2] == pytest.approx(0.5)
    assert out[9, 2] == pytest.approx(0.5)
    # delta-delta of a straight line is zero in the interior
    assert np.allclose(out[4:6, 4], 0.0, atol=1e-12)


def test_deltas_constant_input():
    out = add_deltas(FeatureSequence(np.full((8, 3), 5.0), 100.0, "mfcc"), 2).data
    assert np.allclose(out[:, 3:], 0.0)


def test_deltas_too_short():
    with pytest.raises(SequenceTooShortError):
        add_deltas(FeatureSequence(np.zeros((4, 2)), 100.0, "mfcc"), 2)
    add_deltas(FeatureSequence(np.zeros((5, 2)), 100.0, "mfcc"), 2)


def test_extract_frame_count_and_dims(rng):
    x = rng.standard_normal((16000, 1)) * 0.1
    feats = extract_mfcc(MultichannelSignal(x, 16000.0))
    assert feats.data.shape == (98, 39)
    assert feats.rate_hz == pytest.approx(100.0)
    assert feats.modality == "mfcc"
    assert np.all(np.isfinite(feats.data))


def test_extract_matches_per_frame_mfcc(rng):
    cfg = MfccConfig()
    x = rng.standard_normal(16000) * 0.1
    feats = extract_mfcc(MultichannelSignal(x[:, None], 16000.0), cfg).data
    for i in (0, 7, 55, 97):
        frame = x[i * 160 : i * 160 + 400]
        assert np.allclose(feats[i, :13], mfcc(frame, cfg), atol=1e-10)


def test_extract_input_validation(rng):
    with pytest.raises(WrongSampleRateError):
        extract_mfcc(MultichannelSignal(rng.standard_normal((8000, 1)), 8000.0))
    with pytest.raises(DimensionMismatchError):
        extract_mfcc(MultichannelSignal(rng.standard_normal((16000, 2)), 16000.0))
    with pytest.raises(TooShortSignalError):
        extract_mfcc(MultichannelSignal(rng.standard_normal((300, 1)), 16000.0))


def test_extract_short_but_valid(rng):
    x = rng.standard_normal((4800, 1)) * 0.1
    feats = extract_mfcc(MultichannelSignal(x, 16000.0))
    assert feats.data.shape == (28, 39)
