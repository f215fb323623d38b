"""Linear SVM: L2-regularized hinge risk minimized with Adam.

Inputs are augmented with a trailing constant 1, so the last weight acts as
a bias while the model stays a plain ``h(x) = w . x~``. The bias is
regularized together with the other weights.

Labels: +1 is asphyxia, -1 is normal. A score of exactly 0 predicts +1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, InvalidConfig, InvalidLabel, NonFiniteGradient

LABEL_MAP = {"+1": "asphyxia", "-1": "normal"}


def augment(X) -> np.ndarray:
    """Append the constant-1 bias feature to a vector or row matrix."""
    X = np.asarray(X, dtype=float)
    ones = np.ones(X.shape[:-1] + (1,))
    return np.concatenate([X, ones], axis=-1)


@dataclass
class SvmModel:
    weights: np.ndarray
    lam: float = 1e-3
    selector: object = None  # optional FeatureSelector applied before scoring

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.lam < 0:
            raise InvalidConfig("lambda must be >= 0")

    @classmethod
    def zeros(cls, n_features: int, lam: float = 1e-3) -> "SvmModel":
        return cls(np.zeros(n_features + 1), lam)

    @property
    def n_features(self) -> int:
        return len(self.weights) - 1

    def copy(self) -> "SvmModel":
        return replace(self, weights=self.weights.copy())

    def to_dict(self) -> dict:
        d = {"weights": [float(w) for w in self.weights], "lambda": float(self.lam)}
        if self.selector is not None:
            d["feature_selector"] = self.selector.to_dict()
        d["label_map"] = dict(LABEL_MAP)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        from .forest import FeatureSelector

        sel = d.get("feature_selector")
        return cls(
            np.array(d["weights"], dtype=float),
            float(d["lambda"]),
            FeatureSelector.from_dict(sel) if sel else None,
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SvmModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _check_dims(model: SvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] + 1 != len(model.weights):
        raise DimensionMismatch(
            f"model expects {len(model.weights) - 1} features, got {X.shape[-1]}"
        )
    return X


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if not np.all((y == 1) | (y == -1)):
        raise InvalidLabel("labels must be -1 or +1")
    return y.astype(float)


def hinge_loss(model: SvmModel, x, y) -> float:
    x = _check_dims(model, x)
    y = float(_check_labels(y))
    return max(0.0, 1.0 - y * float(model.weights @ augment(x)))


def objective(model: SvmModel, X, y) -> float:
    """Regularized empirical risk ``lam/2 ||w||^2 + mean hinge``."""
    X = _check_dims(model, X)
    y = _check_labels(y)
    if len(y) == 0:
        raise EmptyDataset("objective needs at least one example")
    margins = y * (augment(X) @ model.weights)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return 0.5 * model.lam * float(model.weights @ model.weights) + float(hinge)


def subgradient(model: SvmModel, X, y) -> np.ndarray:
    """Subgradient of the objective on a mini-batch.

    Only points strictly inside the margin contribute; the kink itself
    contributes zero.
    """
    X = _check_dims(model, X)
    y = _check_labels(y)
    if len(y) == 0:
        raise EmptyDataset("empty batch")
    Xa = augment(X)
    active = y * (Xa @ model.weights) < 1.0
    hinge_grad = -(y[active, None] * Xa[active]).sum(axis=0) / len(y)
    return model.lam * model.weights + hinge_grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, dim: int, alpha=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0, alpha, beta1, beta2, epsilon)


def adam_step(state: AdamState, grad, weights):
    """One bias-corrected Adam update. Returns ``(new_weights, new_state)``."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != np.shape(weights) or grad.shape != state.m.shape:
        raise DimensionMismatch("gradient, weights and Adam moments must share a shape")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("gradient has NaN or inf entries")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_w = weights - state.alpha * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_w, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lam: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidConfig("epochs must be >= 0 and batch_size >= 1")


@dataclass
class LossTrace:
    values: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def train_local(model: SvmModel, X, y, cfg: TrainConfig):
    """Mini-batch Adam on the regularized hinge objective.

    Epoch ``e`` shuffles with the RNG stream ``(cfg.seed, e)``. Adam starts
    from a fresh state and keeps it across the epochs of this call. The
    trace holds the full-data objective after every epoch.
    """
    X = _check_dims(model, X)
    y = _check_labels(y)
    n = len(y)
    if n == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    trained = replace(model, weights=model.weights.copy(), lam=model.lam)
    trace = LossTrace()
    state = AdamState.fresh(len(model.weights), cfg.alpha, cfg.beta1, cfg.beta2, cfg.epsilon)
    w = trained.weights
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            trained.weights = w
            g = subgradient(trained, X[batch], y[batch])
            w, state = adam_step(state, g, w)
        trained.weights = w
        trace.values.append(objective(trained, X, y))
    trained.weights = w
    return trained, trace


def decision_scores(model: SvmModel, X) -> np.ndarray:
    X = _check_dims(model, X)
    return augment(X) @ model.weights


def predict(model: SvmModel, x):
    """``(label, score)`` for one vector; label +1 when score >= 0."""
    score = float(decision_scores(model, x))
    return (1 if score >= 0 else -1), score


def predict_labels(model: SvmModel, X) -> np.ndarray:
    return np.where(decision_scores(model, X) >= 0, 1, -1)


def accuracy(model: SvmModel, X, y) -> float:
    return float(np.mean(predict_labels(model, X) == np.asarray(y)))
