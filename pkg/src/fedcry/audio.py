"""Raw-signal processing for cry recordings.

Resampling, Butterworth band-pass design and filtering, an energy VAD, and
the two augmentations (tanh soft clipping and room-impulse-response reverb).
Every function here is pure: inputs are never modified in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import (
    DegenerateRir,
    EmptySignal,
    InvalidConfig,
    InvalidFilterSpec,
    InvalidGain,
    RateMismatch,
    SignalTooShort,
)

CANONICAL_RATE = 16000


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidConfig("AudioClip holds mono audio only")
        if not np.all(np.isfinite(samples)):
            raise InvalidConfig("AudioClip samples must be finite")
        if self.sample_rate_hz <= 0:
            raise InvalidConfig("sample rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def with_samples(self, samples) -> "AudioClip":
        return AudioClip(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class FilterSpec:
    low_cut_hz: float = 100.0
    high_cut_hz: float = 4000.0
    # Order of the low-pass prototype; the band-pass has 2*order poles
    # realized as ``order`` biquads.
    order: int = 4

    def validate(self, sample_rate_hz: int) -> None:
        if self.order not in (2, 4, 6, 8):
            raise InvalidFilterSpec(f"order must be one of 2, 4, 6, 8 (got {self.order})")
        if not 0 < self.low_cut_hz < self.high_cut_hz:
            raise InvalidFilterSpec("need 0 < low_cut_hz < high_cut_hz")
        if self.high_cut_hz >= sample_rate_hz / 2:
            raise InvalidFilterSpec(
                f"high cut {self.high_cut_hz} Hz is not below Nyquist ({sample_rate_hz / 2} Hz)"
            )


@dataclass(frozen=True)
class SecondOrderSection:
    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    @property
    def b(self):
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self):
        return np.array([1.0, self.a1, self.a2])

    def poles(self) -> np.ndarray:
        return np.roots(self.a)

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))


@dataclass(frozen=True)
class RirFilter:
    taps: np.ndarray
    sample_rate_hz: int
    normalized_power: bool = True
    flipped: bool = False


@dataclass(frozen=True)
class VadConfig:
    frame_ms: float = 30.0
    energy_threshold_db: float = -25.0
    hangover_frames: int = 3

    def __post_init__(self):
        if self.frame_ms <= 0:
            raise InvalidConfig("frame_ms must be positive")
        if self.hangover_frames < 0:
            raise InvalidConfig("hangover_frames must be >= 0")


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Linear-interpolation resampling to ``target_rate_hz``."""
    if target_rate_hz <= 0:
        raise InvalidConfig("target rate must be positive")
    n = len(clip)
    if n == 0:
        raise EmptySignal("cannot resample an empty clip")
    if target_rate_hz == clip.sample_rate_hz:
        return AudioClip(clip.samples.copy(), target_rate_hz)
    n_out = max(1, int(round(n * target_rate_hz / clip.sample_rate_hz)))
    positions = np.arange(n_out) * (clip.sample_rate_hz / target_rate_hz)
    out = np.interp(positions, np.arange(n), clip.samples)
    return AudioClip(out, target_rate_hz)


def _prewarp(f_hz: float, fs: float) -> float:
    return 2.0 * fs * math.tan(math.pi * f_hz / fs)


def design_butterworth_bandpass(spec: FilterSpec, sample_rate_hz: int) -> list[SecondOrderSection]:
    """Digital Butterworth band-pass as a cascade of biquads.

    The analog low-pass prototype is shifted to a band-pass around the
    pre-warped band edges and mapped to z with the bilinear transform.
    Each biquad carries one conjugate (or real) pole pair plus a zero at
    z = 1 and one at z = -1, and is scaled to unit gain at the band center.
    """
    spec.validate(sample_rate_hz)
    fs = float(sample_rate_hz)
    n = spec.order
    w_lo = _prewarp(spec.low_cut_hz, fs)
    w_hi = _prewarp(spec.high_cut_hz, fs)
    w0 = math.sqrt(w_lo * w_hi)
    bw = w_hi - w_lo

    proto = np.exp(1j * np.pi * (2 * np.arange(n) + n + 1) / (2 * n))
    disc = np.sqrt((proto * bw) ** 2 - 4 * w0**2 + 0j)
    analog = np.concatenate([(proto * bw + disc) / 2, (proto * bw - disc) / 2])
    digital = (2 * fs + analog) / (2 * fs - analog)

    tol = 1e-9
    upper = sorted((p for p in digital if p.imag > tol), key=lambda p: (np.angle(p), abs(p)))
    reals = sorted(p.real for p in digital if abs(p.imag) <= tol)
    pairs = [(-2.0 * p.real, abs(p) ** 2) for p in upper]
    for r1, r2 in zip(reals[0::2], reals[1::2]):
        pairs.append((-(r1 + r2), r1 * r2))
    if len(pairs) != n:
        raise InvalidFilterSpec("pole pairing failed; band edges too close to 0 or Nyquist")

    center = 2.0 * math.atan(w0 / (2 * fs))
    z1 = np.exp(-1j * center)
    sections = []
    for a1, a2 in pairs:
        h = (1 - z1**2) / (1 + a1 * z1 + a2 * z1**2)
        g = 1.0 / abs(h)
        sections.append(SecondOrderSection(g, 0.0, -g, float(a1), float(a2)))
    return sections


def frequency_response(sections, freqs_hz, sample_rate_hz: int) -> np.ndarray:
    """Complex response of a biquad cascade at the given frequencies."""
    w = 2 * np.pi * np.asarray(freqs_hz, dtype=float) / sample_rate_hz
    z1 = np.exp(-1j * w)
    h = np.ones_like(z1)
    for s in sections:
        h = h * (s.b0 + s.b1 * z1 + s.b2 * z1**2) / (1 + s.a1 * z1 + s.a2 * z1**2)
    return h


def apply_filter(clip: AudioClip, sections) -> AudioClip:
    """Run the cascade causally from zero state (transposed direct form II)."""
    y = clip.samples
    for s in sections:
        y = sps.lfilter(s.b, s.a, y)
    return clip.with_samples(y)


def bandpass(clip: AudioClip, spec: FilterSpec | None = None) -> AudioClip:
    spec = spec or FilterSpec()
    return apply_filter(clip, design_butterworth_bandpass(spec, clip.sample_rate_hz))


def frame_rms(clip: AudioClip, frame_len: int) -> np.ndarray:
    """RMS of consecutive non-overlapping frames; the tail frame may be short."""
    x = clip.samples
    starts = np.arange(0, len(x), frame_len)
    return np.array([math.sqrt(np.mean(x[s:s + frame_len] ** 2)) for s in starts])


def detect_voice_activity(clip: AudioClip, cfg: VadConfig | None = None) -> list[tuple[int, int]]:
    """Energy-based voice activity detection.

    A frame is active when its RMS exceeds the clip RMS by more than
    ``cfg.energy_threshold_db`` (usually negative). Each active run keeps
    ``hangover_frames`` extra frames after it. Returns ``[start, end)``
    sample ranges, sorted and disjoint.
    """
    cfg = cfg or VadConfig()
    frame_len = max(1, int(round(cfg.frame_ms * clip.sample_rate_hz / 1000)))
    n = len(clip)
    if n < frame_len:
        raise SignalTooShort(f"clip has {n} samples, a VAD frame needs {frame_len}")
    clip_rms = math.sqrt(np.mean(clip.samples**2))
    if clip_rms == 0.0:
        return []
    rms = frame_rms(clip, frame_len)
    active = rms > clip_rms * 10 ** (cfg.energy_threshold_db / 20)

    held = active.copy()
    if cfg.hangover_frames:
        run_ends = np.flatnonzero(active[:-1] & ~active[1:])
        for e in run_ends:
            held[e + 1:e + 1 + cfg.hangover_frames] = True

    segments = []
    i = 0
    while i < len(held):
        if held[i]:
            j = i
            while j < len(held) and held[j]:
                j += 1
            segments.append((i * frame_len, min(j * frame_len, n)))
            i = j
        else:
            i += 1
    return segments


def tanh_distortion(clip: AudioClip, gain: float) -> AudioClip:
    """Soft clipping ``tanh(gain * x)``."""
    if not gain > 0:
        raise InvalidGain(f"gain must be positive, got {gain}")
    return clip.with_samples(np.tanh(gain * clip.samples))


def prepare_rir(
    raw: AudioClip,
    flip_time_axis: bool = False,
    tail_samples: int | None = None,
) -> RirFilter:
    """Clean a recorded impulse response for use as a reverb filter.

    The response is cut to start at its main (absolute-maximum) impulse,
    optionally truncated to ``tail_samples``, and scaled to unit energy.
    """
    x = raw.samples
    if len(x) == 0 or not np.any(x):
        raise DegenerateRir("impulse response is empty or all zero")
    peak = int(np.argmax(np.abs(x)))
    taps = x[peak:]
    if tail_samples is not None:
        taps = taps[:max(1, tail_samples)]
    taps = taps / math.sqrt(np.sum(taps**2))
    if flip_time_axis:
        taps = taps[::-1]
    return RirFilter(taps.copy(), raw.sample_rate_hz, True, flip_time_axis)


def convolve_rir(clip: AudioClip, rir: RirFilter, normalize: bool = True) -> AudioClip:
    """Reverberate ``clip``: linear convolution truncated to the input length.

    With ``normalize`` the result is scaled down to a peak of 1 if it
    overshoots; quieter outputs are left alone.
    """
    if clip.sample_rate_hz != rir.sample_rate_hz:
        raise RateMismatch(
            f"clip is {clip.sample_rate_hz} Hz but the RIR was prepared at {rir.sample_rate_hz} Hz"
        )
    if len(rir.taps) == 0 or not np.any(rir.taps):
        raise DegenerateRir("RIR has no energy")
    if len(clip) == 0:
        return clip
    y = np.convolve(clip.samples, rir.taps)[: len(clip)]
    if normalize:
        peak = np.max(np.abs(y))
        if peak > 1.0:
            y = y / peak
    return clip.with_samples(y)


def synthesize_rir(
    duration_s: float,
    rt60_s: float,
    seed: int,
    sample_rate_hz: int = CANONICAL_RATE,
) -> AudioClip:
    """Exponentially decaying white noise with a unit direct-path impulse."""
    if duration_s <= 0 or rt60_s <= 0:
        raise InvalidConfig("duration_s and rt60_s must be positive")
    n = max(1, int(round(duration_s * sample_rate_hz)))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate_hz
    # amplitude falls 60 dB (a factor of 1000) over rt60
    h = rng.standard_normal(n) * np.exp(-math.log(1000.0) * t / rt60_s)
    h[0] = 1.0
    return AudioClip(h, sample_rate_hz)


@dataclass
class RirBank:
    """A seeded set of synthetic room responses at one sample rate."""

    filters: list[RirFilter] = field(default_factory=list)

    @classmethod
    def synthetic(cls, count: int = 4, seed: int = 0, sample_rate_hz: int = CANONICAL_RATE,
                  rt60_range=(0.2, 0.8)):
        rng = np.random.default_rng(seed)
        filters = []
        for i in range(count):
            rt60 = float(rng.uniform(*rt60_range))
            raw = synthesize_rir(rt60, rt60, seed=int(rng.integers(2**31)), sample_rate_hz=sample_rate_hz)
            filters.append(prepare_rir(raw))
        return cls(filters)

    def __len__(self):
        return len(self.filters)

    def __getitem__(self, i):
        return self.filters[i]
