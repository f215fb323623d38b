"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Options may also come from ``--config FILE`` (TOML); keys are option names
in snake or kebab case, optionally grouped in tables. Explicit flags win
over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .audio import CANONICAL_RATE, FilterSpec, RirBank, VadConfig
from .data import (
    LABEL_NAMES,
    SynthConfig,
    augment_dataset,
    confusion,
    extract_features,
    generate_synthetic_corpus,
    load_corpus,
    metrics,
    split,
)
from .errors import ConfigError, DataError, NoVoiceDetected
from .features import MfccConfig, read_feature_csv, write_feature_csv
from .federation import FedConfig, run_federated_training, train_centralized
from .forest import FeatureSelector, ForestConfig, apply_selector, select_features, train_random_forest
from .inference import diagnose
from .seeding import derive_seed
from .svm import SvmModel, TrainConfig, predict_labels
from .wavio import read_wav, write_wav

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("fedcry")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return f"{x:.9g}"


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _round9(d: dict) -> dict:
    return {k: float(fmt(v)) for k, v in d.items()}


# -- option groups ------------------------------------------------------------

def _add_mfcc(p):
    g = p.add_argument_group("MFCC")
    g.add_argument("--frame-ms", type=float, default=25.0)
    g.add_argument("--hop-ms", type=float, default=10.0)
    g.add_argument("--n-mels", type=int, default=40)
    g.add_argument("--n-coeffs", type=int, default=40)
    g.add_argument("--fmin-hz", type=float, default=20.0)
    g.add_argument("--fmax-hz", type=float, default=7600.0)


def _mfcc_cfg(a) -> MfccConfig:
    return MfccConfig(a.frame_ms, a.hop_ms, a.n_mels, a.n_coeffs, a.fmin_hz, a.fmax_hz)


def _add_train(p):
    g = p.add_argument_group("SVM training")
    g.add_argument("--epochs", type=int, default=5, help="epochs per local training call")
    g.add_argument("--batch-size", type=int, default=32)
    g.add_argument("--alpha", type=float, default=1e-3, help="Adam learning rate")
    g.add_argument("--beta1", type=float, default=0.9)
    g.add_argument("--beta2", type=float, default=0.999)
    g.add_argument("--epsilon", type=float, default=1e-8)
    g.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    g.add_argument("--test-fraction", type=float, default=0.2)
    g.add_argument("--select-k", type=int, default=20,
                   help="keep the k most important features (0 disables selection)")
    g.add_argument("--n-trees", type=int, default=100)
    g.add_argument("--max-depth", type=int, default=8)
    g.add_argument("--min-samples-leaf", type=int, default=2)


def _train_cfg(a, seed: int) -> TrainConfig:
    return TrainConfig(a.epochs, a.batch_size, a.alpha, a.beta1, a.beta2, a.epsilon, a.lam, seed)


def _add_common(p, out_required=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=out_required, help="artifact directory")
    p.add_argument("--config", type=Path, help="TOML file with option overrides")
    p.add_argument("-v", "--verbose", action="count", default=0)


# -- commands -----------------------------------------------------------------

def cmd_synth(a) -> int:
    cfg = SynthConfig(a.n_normal, a.n_asphyxia, 1000, a.sample_rate,
                      tuple(a.normal_f0_hz), tuple(a.asphyxia_f0_hz), a.noise_db, a.seed)
    clips = generate_synthetic_corpus(cfg)
    a.out.mkdir(parents=True, exist_ok=True)
    rows = []
    counters = {}
    for c in clips:
        name = LABEL_NAMES[c.label]
        i = counters.get(name, 0)
        counters[name] = i + 1
        rel = f"{name}/{name}_{i:04d}.wav"
        write_wav(a.out / rel, c.clip)
        rows.append([rel, c.label, fmt(c.f0_hz), c.seed])
    with open(a.out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "label", "f0_hz", "seed"])
        w.writerows(rows)
    log.info("wrote %d clips to %s", len(rows), a.out)
    return EXIT_OK


def cmd_features(a) -> int:
    clips, skipped = load_corpus(a.corpus)
    for err in skipped:
        print(f"skipped: {err}", file=sys.stderr)
    if a.augment and clips:
        bank = RirBank.synthetic(a.n_rirs, derive_seed(a.seed, "rir"), CANONICAL_RATE)
        clips = augment_dataset(clips, (a.tanh_gain_min, a.tanh_gain_max), bank,
                                derive_seed(a.seed, "augment"))
    cfg = _mfcc_cfg(a)
    X, y = extract_features(clips, cfg)
    indices = list(range(cfg.n_coeffs))
    if a.selector:
        sel = FeatureSelector.load(a.selector)
        X = apply_selector(X, sel)
        indices = list(sel.selected_indices)
    write_feature_csv(a.out / "features.csv", X, y, indices)
    log.info("%d rows, %d features (%d files skipped)", len(y), len(indices), len(skipped))
    return EXIT_OK


def _prepare_training(a):
    """Shared front half of train-central and train-fed.

    Loads the CSV, splits it, and optionally fits a feature selector on the
    training rows only.
    """
    X, y, indices = read_feature_csv(a.features)
    if len(set(y.tolist())) != 2:
        raise DataError("feature file must contain both classes")
    train_idx, test_idx = split(y, a.test_fraction, True, derive_seed(a.seed, "split"))
    selector = None
    if a.select_k:
        forest_cfg = ForestConfig(a.n_trees, a.max_depth, a.min_samples_leaf,
                                  seed=derive_seed(a.seed, "forest"))
        forest = train_random_forest(X[train_idx], y[train_idx], forest_cfg)
        local = select_features(forest, min(a.select_k, X.shape[1]))
        X = apply_selector(X, local)
        imp = np.zeros(max(indices) + 1)
        imp[indices] = local.importances
        selector = FeatureSelector(tuple(indices[j] for j in local.selected_indices),
                                   tuple(float(v) for v in imp))
    elif indices != list(range(len(indices))):
        # the CSV was reduced upstream; keep the mapping back to MFCC indices
        selector = FeatureSelector(tuple(indices), tuple(1.0 / len(indices) for _ in indices))
    return X[train_idx], y[train_idx], X[test_idx], y[test_idx], selector


def _metrics_dict(model, X, y) -> dict:
    return _round9(metrics(confusion(predict_labels(model, X), y)).to_dict())


def _write_metrics(out: Path, name: str, d: dict) -> None:
    _write_json(out / f"{name}.json", d)
    flat = {k: v for k, v in d.items() if not isinstance(v, dict)}
    (out / f"{name}.csv").write_text(",".join(flat) + "\n" + ",".join(fmt(v) for v in flat.values()) + "\n")


def cmd_train_central(a) -> int:
    Xtr, ytr, Xte, yte, selector = _prepare_training(a)
    cfg = _train_cfg(a, derive_seed(a.seed, "train"))
    model, losses = train_centralized(Xtr, ytr, cfg, restarts=a.rounds)
    model.selector = selector
    a.out.mkdir(parents=True, exist_ok=True)
    model.save(a.out / "model.json")
    with open(a.out / "loss.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss"])
        w.writerows([i + 1, fmt(v)] for i, v in enumerate(losses))
    _write_metrics(a.out, "metrics", _metrics_dict(model, Xte, yte))
    _write_metrics(a.out, "train_metrics", _metrics_dict(model, Xtr, ytr))
    return EXIT_OK


def cmd_train_fed(a) -> int:
    Xtr, ytr, Xte, yte, selector = _prepare_training(a)
    train_cfg = _train_cfg(a, derive_seed(a.seed, "train"))
    cfg = FedConfig(a.num_silos, a.rounds, a.local_epochs, a.client_fraction, a.partition,
                    a.dirichlet_alpha, derive_seed(a.seed, "train"), train_cfg, a.early_stop)
    model, history = run_federated_training(Xtr, ytr, cfg)
    model.selector = selector
    a.out.mkdir(parents=True, exist_ok=True)
    model.save(a.out / "model.json")
    with open(a.out / "history.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "selected_ids", "train_loss", "avg_train_accuracy"])
        for r in history:
            w.writerow([r.round, ";".join(map(str, r.selected_ids)), fmt(r.train_loss),
                        fmt(r.avg_train_accuracy)])
    _write_metrics(a.out, "metrics", _metrics_dict(model, Xte, yte))
    train = _metrics_dict(model, Xtr, ytr)
    if history:
        train["train_loss"] = float(fmt(history[-1].train_loss))
        train["avg_train_accuracy"] = float(fmt(history[-1].avg_train_accuracy))
    _write_metrics(a.out, "train_metrics", train)
    for r in history[:: max(1, len(history) // 10)]:
        log.info("round %d loss %.6f acc %.4f", r.round, r.train_loss, r.avg_train_accuracy)
    return EXIT_OK


def cmd_eval(a) -> int:
    model = SvmModel.load(a.model)
    X, y, indices = read_feature_csv(a.features)
    if model.selector is not None and len(indices) != model.n_features:
        pos = {j: i for i, j in enumerate(indices)}
        missing = [j for j in model.selector.selected_indices if j not in pos]
        if missing:
            raise DataError(f"feature file lacks columns {missing} used by the model")
        X = X[:, [pos[j] for j in model.selector.selected_indices]]
    report = _metrics_dict(model, X, y)
    if a.out:
        _write_metrics(a.out, "metrics", report)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_diagnose(a) -> int:
    model = SvmModel.load(a.model)
    clip = read_wav(a.wav)
    vad = VadConfig(a.vad_frame_ms, a.vad_threshold_db, a.vad_hangover)
    band = FilterSpec(a.low_cut_hz, a.high_cut_hz, a.filter_order)
    try:
        report = diagnose(clip, model, str(a.wav), _mfcc_cfg(a), vad, band, a.threshold)
    except NoVoiceDetected as exc:
        print(json.dumps({"file": str(a.wav), "error": "NoVoiceDetected", "detail": str(exc)}, indent=2))
        return EXIT_DATA
    text = json.dumps(report.to_dict(), indent=2)
    print(text)
    if a.out:
        a.out.mkdir(parents=True, exist_ok=True)
        (a.out / "diagnosis.json").write_text(text + "\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="fedcry", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = subs["synth"] = sub.add_parser("synth", help="write a synthetic two-class cry corpus")
    _add_common(p)
    p.add_argument("--n-normal", type=int, default=400)
    p.add_argument("--n-asphyxia", type=int, default=400)
    p.add_argument("--sample-rate", type=int, default=CANONICAL_RATE)
    p.add_argument("--normal-f0-hz", type=float, nargs=2, default=[350.0, 550.0])
    p.add_argument("--asphyxia-f0-hz", type=float, nargs=2, default=[650.0, 900.0])
    p.add_argument("--noise-db", type=float, default=-15.0)
    p.set_defaults(func=cmd_synth)

    p = subs["features"] = sub.add_parser("features", help="corpus directory -> MFCC feature CSV")
    p.add_argument("corpus", type=Path)
    _add_common(p)
    _add_mfcc(p)
    p.add_argument("--selector", type=Path, help="selector JSON restricting the columns")
    p.add_argument("--augment", action="store_true", help="add tanh and reverb copies of every clip")
    p.add_argument("--tanh-gain-min", type=float, default=2.0)
    p.add_argument("--tanh-gain-max", type=float, default=8.0)
    p.add_argument("--n-rirs", type=int, default=4)
    p.set_defaults(func=cmd_features)

    p = subs["train-central"] = sub.add_parser("train-central", help="centralized SVM training")
    p.add_argument("features", type=Path)
    _add_common(p)
    _add_train(p)
    p.add_argument("--rounds", type=int, default=1,
                   help="restart Adam this many times (matches a one-silo federation)")
    p.set_defaults(func=cmd_train_central)

    p = subs["train-fed"] = sub.add_parser("train-fed", help="FedAvg training over simulated silos")
    p.add_argument("features", type=Path)
    _add_common(p)
    _add_train(p)
    p.add_argument("--num-silos", type=int, default=10)
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--local-epochs", type=int, default=5)
    p.add_argument("--client-fraction", type=float, default=1.0)
    p.add_argument("--partition", choices=["iid_equal", "dirichlet"], default="iid_equal")
    p.add_argument("--dirichlet-alpha", type=float, default=0.5)
    p.add_argument("--early-stop", action="store_true")
    p.set_defaults(func=cmd_train_fed)

    p = subs["eval"] = sub.add_parser("eval", help="metrics of a model on a feature CSV")
    p.add_argument("features", type=Path)
    p.add_argument("--model", type=Path, required=True)
    _add_common(p, out_required=False)
    p.set_defaults(func=cmd_eval)

    p = subs["diagnose"] = sub.add_parser("diagnose", help="classify one WAV recording")
    p.add_argument("wav", type=Path)
    p.add_argument("--model", type=Path, required=True)
    _add_common(p, out_required=False)
    _add_mfcc(p)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--vad-frame-ms", type=float, default=30.0)
    p.add_argument("--vad-threshold-db", type=float, default=-25.0)
    p.add_argument("--vad-hangover", type=int, default=3)
    p.add_argument("--low-cut-hz", type=float, default=100.0)
    p.add_argument("--high-cut-hz", type=float, default=4000.0)
    p.add_argument("--filter-order", type=int, default=4)
    p.set_defaults(func=cmd_diagnose)
    return parser, subs


def _flatten(d: dict, out=None) -> dict:
    out = {} if out is None else out
    for k, v in d.items():
        if isinstance(v, dict):
            _flatten(v, out)
        else:
            out[k.replace("-", "_")] = v
    return out


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                overrides = _flatten(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if "lambda" in overrides:
            overrides["lam"] = overrides.pop("lambda")
        unknown = sorted(k for k in overrides if not hasattr(args, k) or k in ("command", "func"))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for k in ("out", "config", "corpus", "features", "model", "wav", "selector"):
            if k in overrides and overrides[k] is not None:
                overrides[k] = Path(overrides[k])
        subs[args.command].set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"fedcry: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fedcry: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"fedcry: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        log.exception("internal error")
        print(f"fedcry: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
