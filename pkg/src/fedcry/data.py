"""Corpus handling and evaluation metrics.

Label convention everywhere: +1 = asphyxia (the positive class), -1 = normal.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio import CANONICAL_RATE, AudioClip, RirBank, convolve_rir, resample, tanh_distortion
from .errors import (
    CorpusError,
    DimensionMismatch,
    InvalidConfig,
    MissingRir,
    StratifyError,
    UndefinedMetric,
)
from .features import MfccConfig, mfcc
from .wavio import read_wav

CLASS_LABELS = {"normal": -1, "asphyxia": 1}
LABEL_NAMES = {v: k for k, v in CLASS_LABELS.items()}


@dataclass
class LabeledClip:
    clip: AudioClip
    label: int
    source_id: str
    f0_hz: float | None = None
    seed: int | None = None


def load_corpus(root, target_rate_hz: int = CANONICAL_RATE):
    """Read ``<root>/normal/*.wav`` and ``<root>/asphyxia/*.wav``.

    Returns ``(clips, skipped)``; ``skipped`` lists a ``CorpusError`` per file
    that could not be decoded. Files are visited in lexicographic order.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus directory {root} does not exist")
    clips, skipped = [], []
    for name in sorted(CLASS_LABELS):
        folder = root / name
        if not folder.is_dir():
            continue
        for path in sorted(folder.glob("*.wav")):
            try:
                clip = read_wav(path)
            except CorpusError as exc:
                skipped.append(exc)
                continue
            if len(clip) == 0:
                skipped.append(CorpusError(f"{path}: no samples"))
                continue
            clips.append(LabeledClip(resample(clip, target_rate_hz), CLASS_LABELS[name],
                                     f"{name}/{path.name}"))
    return clips, skipped


@dataclass(frozen=True)
class SynthConfig:
    n_normal: int = 400
    n_asphyxia: int = 400
    duration_ms: int = 1000
    sample_rate: int = CANONICAL_RATE
    normal_f0_hz: tuple[float, float] = (350.0, 550.0)
    asphyxia_f0_hz: tuple[float, float] = (650.0, 900.0)
    asphyxia_noise_db: float = -15.0
    seed: int = 0

    def __post_init__(self):
        if self.n_normal < 0 or self.n_asphyxia < 0:
            raise InvalidConfig("clip counts must be >= 0")
        lo, hi = sorted([self.normal_f0_hz, self.asphyxia_f0_hz])
        if lo[1] >= hi[0]:
            raise InvalidConfig("class F0 ranges must not overlap")


def synth_cry(f0_hz: float, cfg: SynthConfig, rng: np.random.Generator, noise_db: float | None) -> np.ndarray:
    """Harmonic stack with slow F0 wobble, smooth on/offset and optional noise."""
    sr = cfg.sample_rate
    n = int(round(cfg.duration_ms * sr / 1000))
    t = np.arange(n) / sr
    wobble_hz = rng.uniform(2.0, 6.0)
    f_inst = f0_hz * (1.0 + 0.03 * np.sin(2 * np.pi * wobble_hz * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(f_inst) / sr
    x = sum(np.sin(h * phase) / h for h in range(1, 5))

    ramp = max(1, int(0.02 * sr))
    env = np.ones(n)
    fade = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
    env[:ramp] = fade[: min(ramp, n)]
    env[-ramp:] = np.minimum(env[-ramp:], fade[::-1][-min(ramp, n):])
    x = x * env

    if noise_db is not None:
        # white noise at ``noise_db`` relative to the harmonic signal's RMS
        sig_rms = math.sqrt(np.mean(x**2))
        x = x + rng.standard_normal(n) * sig_rms * 10 ** (noise_db / 20)
    peak = rng.uniform(0.3, 0.9)
    return x * (peak / np.max(np.abs(x)))


def generate_synthetic_corpus(cfg: SynthConfig | None = None) -> list[LabeledClip]:
    """Deterministic two-class stand-in corpus (normal first, then asphyxia)."""
    cfg = cfg or SynthConfig()
    out = []
    for name, count, f0_range, noise in (
        ("normal", cfg.n_normal, cfg.normal_f0_hz, None),
        ("asphyxia", cfg.n_asphyxia, cfg.asphyxia_f0_hz, cfg.asphyxia_noise_db),
    ):
        label = CLASS_LABELS[name]
        for i in range(count):
            clip_seed = int(np.random.SeedSequence([cfg.seed, label + 1, i]).generate_state(1)[0])
            rng = np.random.default_rng(clip_seed)
            # centre drawn so that the +-3% wobble stays inside the class band
            f0 = float(rng.uniform(f0_range[0] / 0.97, f0_range[1] / 1.03))
            samples = synth_cry(f0, cfg, rng, noise)
            out.append(LabeledClip(AudioClip(samples, cfg.sample_rate), label,
                                   f"{name}_{i}", f0, clip_seed))
    return out


def augment_dataset(
    clips: list[LabeledClip],
    tanh_gain_range=(2.0, 8.0),
    rir_bank: RirBank | None = None,
    seed: int = 0,
    passes: dict[int, int] | None = None,
) -> list[LabeledClip]:
    """Originals, then tanh-distorted copies, then reverberated copies.

    By default every clip yields one copy of each kind, tripling the corpus.
    ``passes`` maps a label to the number of copies of each kind made for
    that class. RIRs are taken from ``rir_bank`` round-robin.
    """
    if not clips:
        raise InvalidConfig("nothing to augment")
    if rir_bank is None or len(rir_bank) == 0:
        raise MissingRir("augmentation needs at least one RIR")
    lo, hi = tanh_gain_range
    if not 0 < lo <= hi:
        raise InvalidConfig("tanh gain range must satisfy 0 < lo <= hi")
    rng = np.random.default_rng(seed)
    distorted, reverbed = [], []
    rir_i = 0
    for c in clips:
        for p in range((passes or {}).get(c.label, 1)):
            g = float(rng.uniform(lo, hi))
            distorted.append(LabeledClip(tanh_distortion(c.clip, g), c.label,
                                         f"{c.source_id}+tanh{p}(g={g:.3f})", c.f0_hz))
            rir = rir_bank[rir_i % len(rir_bank)]
            reverbed.append(LabeledClip(convolve_rir(c.clip, rir), c.label,
                                        f"{c.source_id}+rir{rir_i % len(rir_bank)}", c.f0_hz))
            rir_i += 1
    return list(clips) + distorted + reverbed


def extract_features(clips: list[LabeledClip], cfg: MfccConfig | None = None):
    """Stack clip-level MFCCs into ``(X, y)``."""
    cfg = cfg or MfccConfig()
    if not clips:
        return np.zeros((0, cfg.n_coeffs)), np.zeros(0, dtype=int)
    X = np.stack([mfcc(c.clip, cfg) for c in clips])
    y = np.array([c.label for c in clips], dtype=int)
    return X, y


def split(y, test_fraction: float = 0.2, stratified: bool = True, seed: int = 0):
    """Seeded train/test index split. Returns ``(train_idx, test_idx)``, both sorted.

    The test size is ``round(n * test_fraction)`` clamped so both sides are
    non-empty. Stratified splits share it out across classes by largest
    remainder, so each class is within one example of its global share.
    """
    y = np.asarray(y)
    n = len(y)
    if not 0 < test_fraction < 1:
        raise InvalidConfig("test_fraction must be in (0, 1)")
    if n < 2:
        raise StratifyError(f"cannot split {n} example(s) into two non-empty parts")
    rng = np.random.default_rng(seed)
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    if not stratified:
        perm = rng.permutation(n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])

    classes = np.unique(y)
    quotas = np.array([np.sum(y == c) * n_test / n for c in classes])
    take = np.floor(quotas).astype(int)
    remainder = quotas - take
    tiebreak = rng.permutation(len(classes))
    for i in sorted(range(len(classes)), key=lambda i: (-remainder[i], tiebreak[i]))[: n_test - take.sum()]:
        take[i] += 1
    test = []
    for c, k in zip(classes, take):
        members = rng.permutation(np.flatnonzero(y == c))
        test.extend(members[:k].tolist())
    test = np.sort(np.array(test, dtype=int))
    train = np.setdiff1d(np.arange(n), test)
    return train, test


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(predictions, labels) -> ConfusionMatrix:
    p = np.asarray(predictions)
    t = np.asarray(labels)
    if p.shape != t.shape or p.ndim != 1 or len(p) == 0:
        raise DimensionMismatch("predictions and labels must be equal-length, non-empty vectors")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == -1))),
        tn=int(np.sum((p == -1) & (t == -1))),
        fn=int(np.sum((p == -1) & (t == 1))),
    )


@dataclass(frozen=True)
class MetricsReport:
    sensitivity: float
    specificity: float
    uar: float
    accuracy: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps({k: float(f"{v:.9g}") for k, v in asdict(self).items()}, indent=2) + "\n"

    def to_csv(self) -> str:
        keys = list(asdict(self))
        return ",".join(keys) + "\n" + ",".join(f"{getattr(self, k):.9g}" for k in keys) + "\n"


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Sensitivity (asphyxia recall), specificity (normal recall), UAR, accuracy."""
    if cm.tp + cm.fn == 0:
        raise UndefinedMetric("asphyxia")
    if cm.tn + cm.fp == 0:
        raise UndefinedMetric("normal")
    sens = cm.tp / (cm.tp + cm.fn)
    spec = cm.tn / (cm.tn + cm.fp)
    return MetricsReport(sens, spec, (sens + spec) / 2, (cm.tp + cm.tn) / cm.total)
