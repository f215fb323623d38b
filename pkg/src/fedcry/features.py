"""MFCC extraction: framing, power spectrum, mel filterbank, log, DCT-II.

A clip is summarized by the mean of its per-frame MFCC vectors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .audio import AudioClip
from .errors import InvalidConfig, ParseError, SignalTooShort


@dataclass(frozen=True)
class MfccConfig:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    n_mels: int = 40
    n_coeffs: int = 40
    fmin_hz: float = 20.0
    fmax_hz: float = 7600.0
    log_floor: float = 1e-10
    clip_ms: float = 1000.0

    def __post_init__(self):
        if self.n_coeffs > self.n_mels:
            raise InvalidConfig("n_coeffs cannot exceed n_mels")
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise InvalidConfig("need 0 <= fmin_hz < fmax_hz")
        if self.hop_ms <= 0 or self.frame_ms < self.hop_ms:
            raise InvalidConfig("need 0 < hop_ms <= frame_ms")

    def frame_length(self, sample_rate_hz: int) -> int:
        return int(round(self.frame_ms * sample_rate_hz / 1000))

    def hop_length(self, sample_rate_hz: int) -> int:
        return int(round(self.hop_ms * sample_rate_hz / 1000))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def frame_and_window(clip: AudioClip, cfg: MfccConfig) -> np.ndarray:
    """Hamming-windowed frames, shape ``(n_frames, frame_len)``."""
    flen = cfg.frame_length(clip.sample_rate_hz)
    hop = cfg.hop_length(clip.sample_rate_hz)
    n = len(clip)
    if n < flen:
        raise SignalTooShort(f"clip has {n} samples, one frame needs {flen}")
    n_frames = (n - flen) // hop + 1
    idx = np.arange(flen)[None, :] + hop * np.arange(n_frames)[:, None]
    return clip.samples[idx] * np.hamming(flen)


def power_spectrum(frame, n_fft: int | None = None) -> np.ndarray:
    """|DFT|^2 on bins 0..n_fft/2 with zero padding to a power of two.

    Accepts a single frame or a stack of frames (last axis is time).
    """
    frame = np.asarray(frame, dtype=float)
    n_fft = n_fft or next_pow2(frame.shape[-1])
    spec = np.fft.rfft(frame, n=n_fft)
    return spec.real**2 + spec.imag**2


def mel_filterbank(cfg: MfccConfig, sample_rate_hz: int, n_fft_bins: int) -> np.ndarray:
    """Triangular filters, shape ``(n_mels, n_fft_bins)``.

    Centers are equally spaced in mel between ``fmin`` and ``fmax``. A filter
    too narrow to straddle any bin gets weight 1 on its nearest bin so that
    no row is empty.
    """
    if cfg.fmax_hz > sample_rate_hz / 2:
        raise InvalidConfig(f"fmax {cfg.fmax_hz} Hz exceeds Nyquist {sample_rate_hz / 2} Hz")
    n_fft = 2 * (n_fft_bins - 1)
    bin_hz = np.arange(n_fft_bins) * sample_rate_hz / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2))
    fb = np.zeros((cfg.n_mels, n_fft_bins))
    for i in range(cfg.n_mels):
        lo, mid, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (bin_hz - lo) / (mid - lo)
        falling = (hi - bin_hz) / (hi - mid)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
        if not fb[i].any():
            fb[i, int(np.argmin(np.abs(bin_hz - mid)))] = 1.0
    return fb


def filter_centers_hz(cfg: MfccConfig) -> np.ndarray:
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2))
    return edges[1:-1]


def pad_to_clip(clip: AudioClip, cfg: MfccConfig) -> AudioClip:
    target = int(round(cfg.clip_ms * clip.sample_rate_hz / 1000))
    if len(clip) >= target:
        return clip
    return clip.with_samples(np.pad(clip.samples, (0, target - len(clip))))


def mfcc_frames(clip: AudioClip, cfg: MfccConfig | None = None) -> np.ndarray:
    """Per-frame MFCCs, shape ``(n_frames, n_coeffs)``."""
    cfg = cfg or MfccConfig()
    frames = frame_and_window(pad_to_clip(clip, cfg), cfg)
    pspec = power_spectrum(frames)
    fb = mel_filterbank(cfg, clip.sample_rate_hz, pspec.shape[-1])
    log_mel = np.log(pspec @ fb.T + cfg.log_floor)
    return dct(log_mel, type=2, norm="ortho", axis=-1)[:, : cfg.n_coeffs]


def mfcc(clip: AudioClip, cfg: MfccConfig | None = None) -> np.ndarray:
    """Clip-level MFCC vector: per-frame coefficients averaged over frames.

    Clips shorter than ``cfg.clip_ms`` are zero-padded first.
    """
    return mfcc_frames(clip, cfg).mean(axis=0)


def feature_names(indices) -> list[str]:
    return [f"f{int(j)}" for j in indices]


def write_feature_csv(path, X, y, indices=None) -> None:
    """One row per clip; header ``f<j>...,label`` where j is the MFCC index."""
    X = np.asarray(X, dtype=float)
    if indices is None:
        indices = range(X.shape[1])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(feature_names(indices) + ["label"])
        for row, label in zip(X, y):
            w.writerow([f"{v:.9g}" for v in row] + [int(label)])


def read_feature_csv(path):
    """Returns ``(X, y, indices)``; ``indices`` are the MFCC indices of the columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty feature file", row=1)
    header = rows[0]
    if len(header) < 2 or header[-1] != "label":
        raise ParseError("header must be f<j>,...,label", row=1)
    try:
        indices = [int(name[1:]) for name in header[:-1] if name.startswith("f")]
    except ValueError as exc:
        raise ParseError(f"bad column name ({exc})", row=1) from None
    if len(indices) != len(header) - 1:
        raise ParseError("feature columns must be named f<j>", row=1)
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=lineno)
        try:
            values = [float(v) for v in row[:-1]]
            label = int(row[-1])
        except ValueError as exc:
            raise ParseError(str(exc), row=lineno) from None
        if label not in (-1, 1):
            raise ParseError(f"label must be -1 or 1, got {label}", row=lineno)
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite feature value", row=lineno)
        X.append(values)
        y.append(label)
    X = np.array(X, dtype=float).reshape(len(y), len(indices))
    return X, np.array(y, dtype=int), indices
