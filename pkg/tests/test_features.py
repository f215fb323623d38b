import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import dct

from fedcry.audio import AudioClip
from fedcry.errors import InvalidConfig, ParseError, SignalTooShort
from fedcry.features import (
    MfccConfig,
    filter_centers_hz,
    frame_and_window,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    mfcc,
    mfcc_frames,
    power_spectrum,
    read_feature_csv,
    write_feature_csv,
)

from oracles import naive_dft_power, reference_mfcc

CFG = MfccConfig()


def test_frame_count_one_second():
    frames = frame_and_window(AudioClip(np.zeros(16000), 16000), CFG)
    assert frames.shape == ((16000 - 400) // 160 + 1, 400) == (98, 400)


def test_frames_of_ones_are_the_window():
    frames = frame_and_window(AudioClip(np.ones(1000), 16000), CFG)
    n = np.arange(400)
    hamming = 0.54 - 0.46 * np.cos(2 * np.pi * n / 399)
    np.testing.assert_allclose(frames, np.broadcast_to(hamming, frames.shape), atol=1e-15)


def test_exactly_one_frame():
    assert frame_and_window(AudioClip(np.ones(400), 16000), CFG).shape == (1, 400)


def test_too_short_for_a_frame():
    with pytest.raises(SignalTooShort):
        frame_and_window(AudioClip(np.ones(399), 16000), CFG)


def test_power_spectrum_zero():
    assert not power_spectrum(np.zeros(400)).any()


def test_power_spectrum_impulse_is_flat():
    x = np.zeros(400)
    x[0] = 1
    p = power_spectrum(x)
    assert len(p) == 257
    np.testing.assert_array_equal(p, 1.0)


def test_power_spectrum_matches_naive_dft():
    x = np.random.default_rng(0).normal(size=64)
    np.testing.assert_allclose(power_spectrum(x), naive_dft_power(x), rtol=1e-9)


def test_power_spectrum_pads_to_pow2():
    x = np.random.default_rng(1).normal(size=50)
    np.testing.assert_allclose(power_spectrum(x), naive_dft_power(x, 64), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("sr,bins", [(16000, 257), (8000, 129), (16000, 513)])
def test_filterbank_rows_are_triangles(sr, bins):
    cfg = MfccConfig(fmax_hz=min(7600, sr / 2))
    fb = mel_filterbank(cfg, sr, bins)
    assert fb.shape == (40, bins)
    assert np.all(fb >= 0)
    for row in fb:
        support = np.flatnonzero(row > 0)
        assert row.sum() > 0
        assert np.array_equal(support, np.arange(support[0], support[-1] + 1))


def test_filter_centers_increase():
    assert np.all(np.diff(filter_centers_hz(CFG)) > 0)


def test_first_filter_center_from_mel_formula():
    m_lo = 2595 * math.log10(1 + 20 / 700)
    m_hi = 2595 * math.log10(1 + 7600 / 700)
    center = 700 * (10 ** ((m_lo + (m_hi - m_lo) / 41) / 2595) - 1)
    fb = mel_filterbank(CFG, 16000, 257)
    peak_bin = int(np.argmax(fb[0]))
    assert abs(peak_bin - center / (16000 / 512)) <= 1


def test_filterbank_rejects_fmax_above_nyquist():
    with pytest.raises(InvalidConfig):
        mel_filterbank(CFG, 8000, 129)


def test_mel_roundtrip():
    f = np.linspace(0, 8000, 50)
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-9)


def test_dct_of_constant_has_single_coefficient():
    c = dct(np.full(40, -3.7), type=2, norm="ortho")
    assert abs(c[0]) > 1
    np.testing.assert_allclose(c[1:], 0, atol=1e-12)


def test_silence_mfcc_equals_any_frame():
    clip = AudioClip(np.zeros(16000), 16000)
    frames = mfcc_frames(clip)
    assert np.all(frames == frames[0])
    np.testing.assert_allclose(mfcc(clip), frames[0], rtol=0, atol=1e-12)


def test_sine_mfcc_matches_reference():
    t = np.arange(16000) / 16000
    x = np.sin(2 * np.pi * 440 * t)
    np.testing.assert_allclose(mfcc(AudioClip(x, 16000)), reference_mfcc(x, 16000), rtol=0, atol=1e-6)


def test_mfcc_scale_only_moves_c0():
    x = np.random.default_rng(3).uniform(-0.4, 0.4, 16000)
    a = mfcc(AudioClip(x, 16000))
    b = mfcc(AudioClip(2 * x, 16000))
    shift = dct(np.full(40, math.log(4)), type=2, norm="ortho")
    np.testing.assert_allclose(b - a, shift, atol=1e-6)


def test_mfcc_pooling_ignores_frame_order():
    x = np.random.default_rng(4).uniform(-1, 1, 16000)
    frames = mfcc_frames(AudioClip(x, 16000))
    perm = np.random.default_rng(5).permutation(len(frames))
    np.testing.assert_allclose(frames[perm].mean(axis=0), mfcc(AudioClip(x, 16000)), atol=1e-12)


def test_mfcc_pads_short_clips():
    x = np.random.default_rng(6).uniform(-1, 1, 9000)
    padded = np.concatenate([x, np.zeros(7000)])
    np.testing.assert_array_equal(mfcc(AudioClip(x, 16000)), mfcc(AudioClip(padded, 16000)))


def test_mfcc_shape_and_determinism():
    x = np.random.default_rng(7).uniform(-1, 1, 16000)
    a, b = mfcc(AudioClip(x, 16000)), mfcc(AudioClip(x, 16000))
    assert a.shape == (40,)
    assert np.array_equal(a, b)


@given(seed=st.integers(0, 2**31))
@settings(max_examples=20)
def test_power_spectrum_property(seed):
    x = np.random.default_rng(seed).normal(size=32)
    np.testing.assert_allclose(power_spectrum(x), naive_dft_power(x), rtol=1e-9, atol=1e-9)


def test_feature_csv_roundtrip(tmp_path):
    X = np.random.default_rng(8).normal(size=(5, 3))
    y = np.array([1, -1, 1, -1, 1])
    write_feature_csv(tmp_path / "f.csv", X, y, [2, 7, 9])
    X2, y2, idx = read_feature_csv(tmp_path / "f.csv")
    assert idx == [2, 7, 9]
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "f2,f7,f9,label"
    np.testing.assert_allclose(X2, X, rtol=1e-8)
    np.testing.assert_array_equal(y2, y)


def test_feature_csv_reports_bad_row(tmp_path):
    (tmp_path / "f.csv").write_text("f0,f1,label\n1,2,1\n1,oops,-1\n")
    with pytest.raises(ParseError) as exc:
        read_feature_csv(tmp_path / "f.csv")
    assert exc.value.row == 3
