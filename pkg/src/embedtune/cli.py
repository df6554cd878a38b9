"""Command-line front end.

Commands: synth, sample, pseudolabel, train, eval. Every value can come
from a key=value config file (--config); command-line flags override the
config file, which overrides built-in defaults. All randomness derives
from a single --seed fanned out to sub-seeds by fixed offsets.

Exit codes: 0 success, 1 data/runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import datamodel, sampler, scoring, synth, trainer
from .datamodel import ClassEmbeddings, EmbeddingSet
from .errors import DataError, MissingGroundTruth
from .pseudo import assign_to_anchors, cluster_pseudolabels
from .sampler import ClusterAlgo, FilterStrategy, SamplerConfig
from .scoring import Temperature
from .semisup import SslConfig
from .trainer import TRAIN_TEMPERATURE, Head, TrainConfig

SAMPLER_SEED_OFFSET = 1000
TRAINER_SEED_OFFSET = 2000

_STRATEGIES = {
    "remove-both": FilterStrategy.REMOVE_BOTH,
    "remove-low": FilterStrategy.REMOVE_LOW_ONLY,
    "remove-high": FilterStrategy.REMOVE_HIGH_ONLY,
    "keep-high": FilterStrategy.KEEP_HIGH_ONLY,
    "keep-low": FilterStrategy.KEEP_LOW_ONLY,
    "no-filter": FilterStrategy.NO_FILTER,
    "random": None,  # baseline, bypasses filtering and clustering
}

_CLUSTER_ALGOS = {
    "kmeans": ClusterAlgo.LLOYD,
    "kmeans++": ClusterAlgo.PLUS_PLUS_INIT,
    "bisecting-kmeans++": ClusterAlgo.BISECTING_PLUS_PLUS,
}


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not a positive number")
    return value


def read_config_file(path: str) -> dict[str, str]:
    """UTF-8 key=value lines; blank lines and '#' comments are ignored."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill in unset args from the config file, re-validating through the
    option's type callable so config values face the same range checks."""
    if not getattr(args, "config", None):
        return
    values = read_config_file(args.config)
    actions = {a.dest: a for a in parser._actions}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            subparser = action.choices.get(args.command)
            if subparser is not None:
                actions.update({a.dest: a for a in subparser._actions})
    for key, text in values.items():
        if key not in actions or getattr(args, key, None) is not None:
            continue
        action = actions[key]
        try:
            value = action.type(text) if callable(action.type) else text
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"config value {key}={text!r}: {exc}")
        if action.choices is not None and value not in action.choices:
            parser.error(f"config value {key}={text!r} not in {action.choices}")
        setattr(args, key, value)


def _defaulted(args: argparse.Namespace, defaults: dict) -> None:
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _load_pool(args) -> EmbeddingSet:
    return datamodel.load_embeddings(args.pool, labels_path=args.pool_labels)


def _load_classes(args) -> ClassEmbeddings:
    emb = datamodel.load_embeddings(args.classes)
    names = (datamodel.load_class_names(args.class_names)
             if getattr(args, "class_names", None) else None)
    return ClassEmbeddings(emb.data, names=names)


def _ground_truth_pairs(pool: EmbeddingSet, indices) -> list[tuple[int, int]]:
    if pool.labels is None:
        raise MissingGroundTruth("pool labels are required to attach labels")
    pairs = []
    for i in indices:
        label = int(pool.labels[i])
        if label < 0:
            raise MissingGroundTruth(f"pool sample {i} has no ground-truth label")
        pairs.append((int(i), label))
    return pairs


def _write_pairs(pairs: list[tuple[int, int]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for idx, label in pairs:
            fh.write(f"{idx} {label}\n")


def _read_pairs(path) -> list[tuple[int, int]]:
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        idx, label = line.split()
        pairs.append((int(idx), int(label)))
    return pairs


def _select_labelled(pool: EmbeddingSet, classes: ClassEmbeddings,
                     args) -> list[tuple[int, int]]:
    budget = args.budget
    if budget is None and args.per_class is not None:
        budget = args.per_class * classes.class_count
    if budget is None:
        raise DataError("a labelling budget (--budget or --per-class) is required")
    seed = args.seed + SAMPLER_SEED_OFFSET
    if args.strategy == "random":
        indices = sampler.random_labelled_set(pool.count, budget, seed)
    else:
        probs = scoring.predict_probs(pool, classes, Temperature(args.temperature))
        config = SamplerConfig(
            budget=budget, quantiles=args.q,
            strategy=_STRATEGIES[args.strategy],
            cluster_algo=_CLUSTER_ALGOS[args.cluster_algo],
            max_iterations=args.max_iter, seed=seed,
        )
        indices = sampler.sample_labelled_set(pool, probs, config)
    return _ground_truth_pairs(pool, indices)


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        class_count=args.classes, dim=args.dim, per_class=args.per_class,
        sigma=args.sigma, miscalibration=args.miscal, seed=args.seed,
    )
    pool, test, zero_shot, true_anchors = synth.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    datamodel.write_embeddings(pool, out / "pool.emb")
    datamodel.write_labels(pool.labels, out / "pool.labels")
    datamodel.write_embeddings(test, out / "test.emb")
    datamodel.write_labels(test.labels, out / "test.labels")
    datamodel.write_embeddings(
        EmbeddingSet(zero_shot.weights, normalized=True), out / "classes.emb")
    datamodel.write_embeddings(
        EmbeddingSet(true_anchors.weights, normalized=True), out / "classes_true.emb")
    datamodel.write_class_names(zero_shot.names, out / "classes.names")

    probs = scoring.predict_probs(test, zero_shot, Temperature(args.temperature))
    acc = float(np.mean(scoring.argmax_labels(probs) == test.labels))
    print(f"zero-shot accuracy: {acc:.4f}")
    return 0


def cmd_sample(args) -> int:
    pool = _load_pool(args)
    classes = _load_classes(args)
    pairs = _select_labelled(pool, classes, args)
    _write_pairs(pairs, args.out)
    print(f"selected {len(pairs)} labelled samples -> {args.out}")
    return 0


def cmd_pseudolabel(args) -> int:
    pool = _load_pool(args)
    labelled = _read_pairs(args.labelled)
    anchors = np.array([i for i, _ in labelled], dtype=np.int64)
    anchor_labels = np.array([y for _, y in labelled], dtype=np.int64)
    clusters = assign_to_anchors(pool, anchors)
    pairs = cluster_pseudolabels(clusters, anchor_labels, args.p)
    _write_pairs(pairs, args.out)
    print(f"pseudo-labelled {len(pairs)} samples -> {args.out}")
    return 0


def cmd_train(args) -> int:
    pool = _load_pool(args)
    test = datamodel.load_embeddings(args.test, labels_path=args.test_labels)
    classes = _load_classes(args)

    if args.labelled:
        labelled = _read_pairs(args.labelled)
    else:
        labelled = _select_labelled(pool, classes, args)

    config = TrainConfig(
        sessions=args.sessions, epochs_per_session=args.epochs,
        learning_rate=args.lr, batch_size=args.batch_size,
        seed=args.seed + TRAINER_SEED_OFFSET,
        ssl_config=SslConfig(tau=args.tau, top_k=args.topk, lam=args.lam),
        p=args.p, temperature=Temperature(args.train_temperature),
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics, head = trainer.run_sessions(
        pool, test, classes, labelled, config, metrics_path=out / "metrics.jsonl")
    datamodel.write_embeddings(
        EmbeddingSet(head.weights.astype(np.float32)), out / "head.emb")
    for record in metrics:
        print(record.to_json())
    return 0


def cmd_eval(args) -> int:
    head_emb = datamodel.load_embeddings(args.head)
    test = datamodel.load_embeddings(args.test, labels_path=args.test_labels)
    head = Head(weights=head_emb.data.astype(np.float64),
                temperature=Temperature(args.temperature))
    acc = trainer.evaluate(head, test)
    print(f"accuracy: {acc:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedtune",
        description="Confidence-aware semi-supervised tuning over frozen embeddings",
    )
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="cap BLAS worker threads (results are unchanged)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    common(p)
    p.add_argument("--classes", type=_positive_int, default=None)
    p.add_argument("--dim", type=_positive_int, default=None)
    p.add_argument("--per-class", type=_positive_int, default=None)
    p.add_argument("--sigma", type=_positive_float, default=None)
    p.add_argument("--miscal", type=_fraction, default=None)
    p.add_argument("--temperature", type=_positive_float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth, defaults={
        "classes": 10, "dim": 32, "per_class": 200, "sigma": 0.05,
        "miscal": 0.6, "seed": 0, "temperature": scoring.DEFAULT_TEMPERATURE,
        "out": "synth-out",
    })

    def data_flags(p, with_test=False):
        p.add_argument("--pool", default=None)
        p.add_argument("--pool-labels", default=None)
        p.add_argument("--classes", dest="classes", default=None)
        p.add_argument("--class-names", default=None)
        if with_test:
            p.add_argument("--test", default=None)
            p.add_argument("--test-labels", default=None)

    def sampler_flags(p):
        p.add_argument("--strategy", choices=sorted(_STRATEGIES), default=None)
        p.add_argument("--budget", type=_positive_int, default=None)
        p.add_argument("--per-class", type=_positive_int, default=None)
        p.add_argument("--q", type=_positive_int, default=None)
        p.add_argument("--cluster-algo", choices=sorted(_CLUSTER_ALGOS), default=None)
        p.add_argument("--max-iter", type=_positive_int, default=None)
        p.add_argument("--temperature", type=_positive_float, default=None)

    sampler_defaults = {
        "strategy": "remove-both", "q": 5, "cluster_algo": "kmeans",
        "max_iter": 100, "temperature": scoring.DEFAULT_TEMPERATURE,
        "seed": 0, "budget": None, "per_class": None,
    }

    p = sub.add_parser("sample", help="select the labelled set")
    common(p)
    data_flags(p)
    sampler_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample, defaults={**sampler_defaults, "out": "labelled.txt"})

    p = sub.add_parser("pseudolabel", help="cluster-guided pseudo-labels")
    common(p)
    p.add_argument("--pool", default=None)
    p.add_argument("--pool-labels", default=None)
    p.add_argument("--labelled", default=None, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pseudolabel,
                   defaults={"p": 50, "seed": 0, "out": "pseudo.txt"})

    p = sub.add_parser("train", help="run the full training pipeline")
    common(p)
    data_flags(p, with_test=True)
    sampler_flags(p)
    p.add_argument("--labelled", default=None,
                   help="labelled-set file; omit to sample internally")
    p.add_argument("--sessions", type=_positive_int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=_positive_float, default=None)
    p.add_argument("--batch-size", type=_positive_int, default=None)
    p.add_argument("--tau", type=_fraction, default=None)
    p.add_argument("--topk", type=_positive_int, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--train-temperature", type=_positive_float, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_train, defaults={
        **sampler_defaults, "sessions": 10, "epochs": 50, "lr": 0.02,
        "batch_size": 64, "tau": 0.05, "topk": 2, "lam": 1.0, "p": 50,
        "train_temperature": TRAIN_TEMPERATURE, "out_dir": "train-out",
        "labelled": None,
    })

    p = sub.add_parser("eval", help="evaluate a head on a test set")
    common(p)
    p.add_argument("--head", default=None, required=True)
    p.add_argument("--test", default=None, required=True)
    p.add_argument("--test-labels", default=None, required=True)
    p.add_argument("--temperature", type=_positive_float, default=None)
    p.set_defaults(func=cmd_eval, defaults={
        "temperature": scoring.DEFAULT_TEMPERATURE, "seed": 0})

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(parser, args)
    _defaulted(args, args.defaults)

    limiter = None
    if args.threads is not None:
        try:
            from threadpoolctl import threadpool_limits
            limiter = threadpool_limits(limits=args.threads)
        except ImportError:
            pass
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if limiter is not None:
            limiter.unregister()


if __name__ == "__main__":
    sys.exit(main())
