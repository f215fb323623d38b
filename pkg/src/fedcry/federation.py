"""Cross-silo FedAvg simulation over in-memory silos."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, InvalidConfig, NotEnoughData
from .svm import SvmModel, TrainConfig, accuracy, objective, train_local

# Stream tags for SeedSequence-derived RNGs; changing them changes every run.
_TAG_PARTITION = 1
_TAG_SELECT = 2
_TAG_CLIENT = 3


def client_seed(seed: int, round_index: int, silo_id: int) -> int:
    """Training seed of one client in one round.

    Centralized training reproduces a single-silo federation by calling
    ``train_local`` once per round with ``client_seed(seed, r, 0)``.
    """
    ss = np.random.SeedSequence([seed, _TAG_CLIENT, round_index, silo_id])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class Silo:
    id: int
    X: np.ndarray
    y: np.ndarray
    indices: np.ndarray | None = None  # rows of the source dataset, ascending

    @property
    def n_k(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class FedConfig:
    num_silos: int = 10
    rounds: int = 50
    local_epochs: int = 5
    client_fraction: float = 1.0
    partition: str = "iid_equal"
    dirichlet_alpha: float = 0.5
    seed: int = 0
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    early_stop: bool = False
    early_stop_tol: float = 1e-6
    early_stop_patience: int = 5

    def __post_init__(self):
        if self.num_silos < 1 or self.rounds < 0 or self.local_epochs < 0:
            raise InvalidConfig("num_silos >= 1, rounds >= 0, local_epochs >= 0 required")
        if not 0 < self.client_fraction <= 1:
            raise InvalidConfig("client_fraction must be in (0, 1]")
        if self.partition not in ("iid_equal", "dirichlet"):
            raise InvalidConfig(f"unknown partition {self.partition!r}")
        if self.partition == "dirichlet" and self.dirichlet_alpha <= 0:
            raise InvalidConfig("dirichlet_alpha must be positive")


@dataclass
class RoundRecord:
    round: int
    selected_ids: list[int]
    global_weights: np.ndarray
    train_loss: float
    avg_train_accuracy: float


def _make_silos(X, y, groups) -> list[Silo]:
    silos = []
    for k, idx in enumerate(groups):
        idx = np.sort(np.asarray(idx, dtype=int))
        silos.append(Silo(k, X[idx], y[idx], idx))
    return silos


def partition_dataset(X, y, num_silos: int, strategy: str = "iid_equal", seed: int = 0,
                      alpha: float = 0.5) -> list[Silo]:
    """Split a dataset into disjoint silos.

    ``iid_equal`` deals a shuffled copy into equal shards, giving the
    remainder one example each to the first silos. ``dirichlet`` splits
    each class by Dirichlet(alpha) proportions. A silo left empty takes one
    example from the currently largest silo. Rows keep their original
    relative order inside each silo.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = len(y)
    if n < num_silos:
        raise NotEnoughData(f"{n} examples cannot fill {num_silos} silos")
    rng = np.random.default_rng([seed, _TAG_PARTITION])
    if strategy == "iid_equal":
        perm = rng.permutation(n)
        base, extra = divmod(n, num_silos)
        sizes = [base + (1 if k < extra else 0) for k in range(num_silos)]
        groups = np.split(perm, np.cumsum(sizes)[:-1])
    elif strategy == "dirichlet":
        groups = [[] for _ in range(num_silos)]
        for c in np.unique(y):
            members = rng.permutation(np.flatnonzero(y == c))
            props = rng.dirichlet(np.full(num_silos, alpha))
            cuts = np.round(np.cumsum(props)[:-1] * len(members)).astype(int)
            for k, part in enumerate(np.split(members, cuts)):
                groups[k].extend(part.tolist())
        for k in range(num_silos):
            if not groups[k]:
                donor = max(range(num_silos), key=lambda j: (len(groups[j]), -j))
                groups[donor].sort()
                groups[k].append(groups[donor].pop())
    else:
        raise InvalidConfig(f"unknown partition strategy {strategy!r}")
    return _make_silos(X, y, groups)


def select_clients(silos: list[Silo], fraction: float, rng: np.random.Generator | None = None) -> list[Silo]:
    """Uniform sample without replacement of ``ceil(fraction * K)`` silos, id order."""
    if not 0 < fraction <= 1:
        raise InvalidConfig("fraction must be in (0, 1]")
    ordered = sorted(silos, key=lambda s: s.id)
    m = max(1, math.ceil(fraction * len(ordered)))
    if m >= len(ordered):
        return ordered
    if rng is None:
        raise InvalidConfig("partial participation needs an RNG")
    picked = rng.choice(len(ordered), size=m, replace=False)
    return [ordered[i] for i in sorted(picked)]


def aggregate(updates) -> np.ndarray:
    """Data-weighted FedAvg of ``[(silo_id, weights, n_k), ...]``.

    Weights are normalized by the total data of the participating clients
    and accumulated in ascending silo-id order, so the result does not
    depend on the order of ``updates``. ``(weights, n_k)`` pairs are also
    accepted; they are then summed in the given order.
    """
    updates = list(updates)
    if not updates:
        raise EmptyDataset("nothing to aggregate")
    if len(updates[0]) == 2:
        updates = [(i, w, n) for i, (w, n) in enumerate(updates)]
    updates = sorted(updates, key=lambda u: u[0])
    dim = np.shape(updates[0][1])
    if any(np.shape(w) != dim for _, w, _ in updates):
        raise DimensionMismatch("client weight vectors differ in length")
    total = sum(n for _, _, n in updates)
    # Accumulate offsets from the first client: the same weighted mean since
    # the fractions sum to 1, but identical clients reproduce w bit for bit.
    ref = np.asarray(updates[0][1], dtype=float)
    out = ref.copy()
    for _, w, n in updates:
        out += (n / total) * (np.asarray(w, dtype=float) - ref)
    return out


def evaluate_global(weights, silos: list[Silo], lam: float) -> tuple[float, float]:
    """Objective over the union of all silo data and mean per-silo accuracy."""
    model = SvmModel(weights, lam)
    X = np.concatenate([s.X for s in silos])
    y = np.concatenate([s.y for s in silos])
    loss = objective(model, X, y)
    acc = float(np.mean([accuracy(model, s.X, s.y) for s in silos]))
    return loss, acc


def run_round(global_weights, silos: list[Silo], cfg: FedConfig, round_index: int):
    """One communication round. Returns ``(new_global_weights, RoundRecord)``."""
    if not silos:
        raise EmptyDataset("no silos")
    rng = np.random.default_rng([cfg.seed, _TAG_SELECT, round_index])
    selected = select_clients(silos, cfg.client_fraction, rng)
    updates = []
    for silo in selected:
        local_cfg = replace(cfg.train_cfg, epochs=cfg.local_epochs,
                            seed=client_seed(cfg.seed, round_index, silo.id))
        start = SvmModel(np.array(global_weights, dtype=float), cfg.train_cfg.lam)
        trained, _ = train_local(start, silo.X, silo.y, local_cfg)
        updates.append((silo.id, trained.weights, silo.n_k))
    new_global = aggregate(updates)
    loss, acc = evaluate_global(new_global, silos, cfg.train_cfg.lam)
    record = RoundRecord(round_index, [s.id for s in selected], new_global.copy(), loss, acc)
    return new_global, record


def run_federated_training(X, y, cfg: FedConfig, silos: list[Silo] | None = None):
    """Partition once, start from zero weights, run ``cfg.rounds`` rounds.

    Returns ``(model, history)``. With ``cfg.early_stop`` the loop ends once
    the training loss has improved by less than ``early_stop_tol`` for
    ``early_stop_patience`` consecutive rounds.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(y) == 0:
        raise EmptyDataset("no training data")
    if silos is None:
        silos = partition_dataset(X, y, cfg.num_silos, cfg.partition, cfg.seed, cfg.dirichlet_alpha)
    weights = np.zeros(X.shape[1] + 1)
    history: list[RoundRecord] = []
    stale = 0
    for r in range(cfg.rounds):
        weights, record = run_round(weights, silos, cfg, r)
        if cfg.early_stop and history:
            stale = stale + 1 if history[-1].train_loss - record.train_loss < cfg.early_stop_tol else 0
        history.append(record)
        if cfg.early_stop and stale >= cfg.early_stop_patience:
            break
    return SvmModel(weights, cfg.train_cfg.lam), history


def train_centralized(X, y, cfg: TrainConfig, restarts: int = 1, seed: int | None = None):
    """Centralized training on the per-round schedule of a one-silo federation.

    Runs ``restarts`` consecutive ``train_local`` calls of ``cfg.epochs``
    epochs each, every call with a fresh Adam state and seed
    ``client_seed(seed, r, 0)``. Returns ``(model, epoch_losses)``.
    """
    X = np.asarray(X, dtype=float)
    seed = cfg.seed if seed is None else seed
    model = SvmModel.zeros(X.shape[1], cfg.lam)
    losses: list[float] = []
    for r in range(restarts):
        model, trace = train_local(model, X, y, replace(cfg, seed=client_seed(seed, r, 0)))
        losses.extend(trace.values)
    return model, losses
