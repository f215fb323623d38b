"""Mono 16-bit PCM WAV reading and writing."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .audio import AudioClip
from .errors import CorpusError

FULL_SCALE = 32768.0


def read_wav(path) -> AudioClip:
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise CorpusError(f"{path}: unreadable WAV ({exc})") from exc
    if channels != 1:
        raise CorpusError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise CorpusError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if not 8000 <= rate <= 48000:
        raise CorpusError(f"{path}: sample rate {rate} Hz outside 8000-48000")
    pcm = np.frombuffer(frames, dtype="<i2")
    return AudioClip(pcm.astype(np.float64) / FULL_SCALE, rate)


def to_pcm16(samples) -> np.ndarray:
    scaled = np.round(np.asarray(samples, dtype=np.float64) * FULL_SCALE)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def write_wav(path, clip: AudioClip) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(to_pcm16(clip.samples).tobytes())
