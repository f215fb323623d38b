"""Diagnosis of a recording: VAD, band-pass, 1 s windows, per-window SVM vote."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import CANONICAL_RATE, AudioClip, FilterSpec, VadConfig, bandpass, detect_voice_activity, resample
from .errors import NoVoiceDetected
from .features import MfccConfig, mfcc
from .forest import apply_selector
from .svm import SvmModel, predict


@dataclass
class WindowResult:
    start_ms: float
    label: int
    score: float


@dataclass
class DiagnosisReport:
    file: str
    windows: list[WindowResult] = field(default_factory=list)
    verdict: str = "normal"
    positive_window_fraction: float = 0.0
    threshold: float = 0.5

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "windows": [
                {"start_ms": float(f"{w.start_ms:.9g}"), "label": w.label, "score": float(f"{w.score:.9g}")}
                for w in self.windows
            ],
            "verdict": self.verdict,
            "positive_window_fraction": float(f"{self.positive_window_fraction:.9g}"),
            "threshold": self.threshold,
        }


def voiced_windows(clip: AudioClip, vad: VadConfig, band: FilterSpec, window_ms: float = 1000.0):
    """Cut the voiced, band-passed audio into fixed windows.

    Active segments are concatenated and split into ``window_ms`` pieces. A
    short tail is zero-padded if it holds at least half a window, otherwise
    dropped. Yields ``(start_ms, clip)`` where ``start_ms`` is the position
    of the window's first sample in the original recording.
    """
    segments = detect_voice_activity(clip, vad)
    if not segments:
        return []
    filtered = bandpass(clip, band).samples
    positions = np.concatenate([np.arange(s, e) for s, e in segments])
    voiced = filtered[positions]
    win = int(round(window_ms * clip.sample_rate_hz / 1000))
    out = []
    for start in range(0, len(voiced), win):
        piece = voiced[start:start + win]
        if len(piece) < win:
            if 2 * len(piece) < win:
                break
            piece = np.pad(piece, (0, win - len(piece)))
        out.append((1000.0 * positions[start] / clip.sample_rate_hz, clip.with_samples(piece)))
    return out


def diagnose(
    clip: AudioClip,
    model: SvmModel,
    name: str = "",
    mfcc_cfg: MfccConfig | None = None,
    vad: VadConfig | None = None,
    band: FilterSpec | None = None,
    threshold: float = 0.5,
) -> DiagnosisReport:
    """Majority vote over 1 s windows; ties at ``threshold`` go to asphyxia.

    Raises ``NoVoiceDetected`` when no window survives VAD.
    """
    clip = resample(clip, CANONICAL_RATE)
    windows = voiced_windows(clip, vad or VadConfig(), band or FilterSpec())
    if not windows:
        raise NoVoiceDetected(f"{name or 'recording'}: no voiced audio found")
    results = []
    for start_ms, piece in windows:
        v = mfcc(piece, mfcc_cfg)
        if model.selector is not None:
            v = apply_selector(v, model.selector)
        label, score = predict(model, v)
        results.append(WindowResult(start_ms, label, score))
    frac = sum(r.label == 1 for r in results) / len(results)
    verdict = "asphyxia" if frac >= threshold else "normal"
    return DiagnosisReport(name, results, verdict, frac, threshold)
