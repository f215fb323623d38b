"""Federated birth-asphyxia cry classification at desk scale."""

from .audio import AudioClip, FilterSpec, VadConfig
from .data import SynthConfig, generate_synthetic_corpus
from .features import MfccConfig, mfcc
from .federation import FedConfig, run_federated_training
from .svm import SvmModel, TrainConfig, train_local

__all__ = [
    "AudioClip",
    "FedConfig",
    "FilterSpec",
    "MfccConfig",
    "SvmModel",
    "SynthConfig",
    "TrainConfig",
    "VadConfig",
    "generate_synthetic_corpus",
    "mfcc",
    "run_federated_training",
    "train_local",
]

__version__ = "0.1.0"
