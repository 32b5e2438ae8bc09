"""Command-line interface.

Commands: ``ingest-check``, ``train-stage1``, ``train-stage2``, ``evaluate``,
``predict``.  Paths can also come from a flat ``key=value`` config file
(``--config``); explicit flags win over config values, and ``--set key=value``
overrides any training hyperparameter.  Relative data paths that do not
exist locally are resolved against ``$ASTE_DATA_ROOT``.
"""

from __future__ import annotations

import argparse
import inspect
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .corpus import corpus_stats, load_corpus
from .errors import AsteError, ConfigError
from .evaluation import MODES, SentencePrediction, evaluate_predictions
from .training import JointTagger, PairClassifier, TripletExtractor
from .vectors import EmbeddingTable, Vocabulary, load_embeddings

DATA_ROOT_VAR = "ASTE_DATA_ROOT"

_PATH_KEYS = ("corpus", "dep", "valid", "valid_dep", "emb", "ckpt1", "ckpt2", "out", "pred", "gold")


def _resolve(path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    if Path(path).exists():
        return path
    root = os.environ.get(DATA_ROOT_VAR)
    if root and not Path(path).is_absolute():
        candidate = Path(root) / path
        if candidate.exists():
            return str(candidate)
    return path


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered == "none":
        return None
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _read_config(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, found {line!r}")
        values[key.strip()] = value.strip()
    return values


def _gather_overrides(args: argparse.Namespace, estimator_cls) -> dict:
    """Merge config-file and --set hyperparameters, checking key names."""
    allowed = set(inspect.signature(estimator_cls.__init__).parameters) - {"self"}
    extra = {"embed_dim", "valid_fraction"}
    overrides: dict = {}
    for source in (getattr(args, "config_values", {}), dict(args.set or [])):
        for key, value in source.items():
            if key in _PATH_KEYS or key == "mode":
                continue
            if key not in allowed | extra:
                raise ConfigError(f"unknown override key {key!r}")
            overrides[key] = _coerce(value) if isinstance(value, str) else value
    if args.seed is not None:
        overrides["seed"] = args.seed
    return overrides


def _load_sentences(corpus: str, dep: Optional[str]):
    return load_corpus(_resolve(corpus), _resolve(dep))


def _embedding_table(args: argparse.Namespace, sentences, extra_sentences, dim: int, seed: int):
    vocab = Vocabulary.build(
        [s.tokens for s in sentences] + [s.tokens for s in extra_sentences]
    )
    if args.emb:
        return load_embeddings(_resolve(args.emb), vocab, dim=dim, seed=seed)
    return EmbeddingTable.random(vocab, dim=dim, seed=seed)


def _cmd_ingest_check(args: argparse.Namespace) -> int:
    sentences = _load_sentences(args.corpus, args.dep)
    stats = corpus_stats(sentences)
    print(f"sentences={stats.sentences} pairs={stats.pairs}")
    return 0


def _fit_stage(args: argparse.Namespace, estimator_cls) -> int:
    overrides = _gather_overrides(args, estimator_cls)
    embed_dim = overrides.pop("embed_dim", 300)
    overrides.pop("valid_fraction", None)
    estimator = estimator_cls(verbose=True, **overrides)

    train = _load_sentences(args.corpus, args.dep)
    validation = None
    if args.valid:
        validation = _load_sentences(args.valid, args.valid_dep)
    table = _embedding_table(args, train, validation or [], embed_dim, estimator.seed)

    estimator.fit(train, table, validation=validation)
    estimator.save(args.out)
    print(f"best_epoch={estimator.best_epoch_} val_metric={estimator.best_metric_:.6f}")
    print(f"checkpoint={args.out}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    pipeline = TripletExtractor.from_checkpoints(_resolve(args.ckpt1), _resolve(args.ckpt2))
    sentences = _load_sentences(args.corpus, args.dep)
    predictions = pipeline.predict(sentences)
    lines = [json.dumps(p.to_record(), sort_keys=True) for p in predictions]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    total = sum(len(p.triplets or []) for p in predictions)
    print(
        f"sentences={len(predictions)} triplets={total} "
        f"dropped_candidates={pipeline.dropped_candidates_}"
    )
    return 0


def _read_prediction_file(path: str) -> list[SentencePrediction]:
    """Read predictions from JSONL records or from a gold corpus file."""
    text = Path(_resolve(path)).read_text(encoding="utf-8")
    first = next((line for line in text.splitlines() if line.strip()), "")
    if first.lstrip().startswith("{"):
        return [
            SentencePrediction.from_record(json.loads(line))
            for line in text.splitlines()
            if line.strip()
        ]
    from .corpus import parse_corpus

    return [
        SentencePrediction.from_gold(sid, s) for sid, s in enumerate(parse_corpus(text))
    ]


def _cmd_evaluate(args: argparse.Namespace) -> int:
    predictions = _read_prediction_file(args.pred)
    gold = _read_prediction_file(args.gold)
    modes = list(MODES) if args.mode == "all" else [args.mode]
    records = []
    for mode in modes:
        report = evaluate_predictions(predictions, gold, mode)
        records.append(report.as_dict())
        print(
            f"mode={report.mode} precision={report.precision:.4f} "
            f"recall={report.recall:.4f} f1={report.f1:.4f} "
            f"pred={report.num_pred} gold={report.num_gold} correct={report.num_correct}"
        )
    if args.out:
        lines = [json.dumps(r, sort_keys=True) for r in records]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="random seed override")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        type=lambda kv: tuple(kv.split("=", 1)),
        help="override a training hyperparameter",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aste",
        description="Two-stage aspect sentiment triplet extraction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="parse a corpus and print its statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dep")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest_check)

    for name, estimator_cls in (("train-stage1", JointTagger), ("train-stage2", PairClassifier)):
        p = sub.add_parser(name, help=f"train the {name.split('-')[1]} model")
        p.add_argument("--corpus", required=True, help="training corpus")
        p.add_argument("--dep", help="dependency heads for the training corpus")
        p.add_argument("--valid", help="validation corpus (default: carve 20%% of train)")
        p.add_argument("--valid-dep", dest="valid_dep")
        p.add_argument("--emb", help="word vector file (default: seeded random vectors)")
        p.add_argument("--out", required=True, help="checkpoint output path")
        _add_common(p)
        p.set_defaults(func=lambda a, cls=estimator_cls: _fit_stage(a, cls))

    p = sub.add_parser("predict", help="run the two-stage pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dep")
    p.add_argument("--ckpt1", required=True, help="stage-one checkpoint")
    p.add_argument("--ckpt2", required=True, help="stage-two checkpoint")
    p.add_argument("--out", required=True, help="prediction JSONL output path")
    _add_common(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--pred", required=True, help="prediction JSONL file")
    p.add_argument("--gold", required=True, help="gold corpus or prediction JSONL file")
    p.add_argument("--mode", default="all", choices=list(MODES) + ["all"])
    p.add_argument("--out", help="metrics JSONL output path")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    return parser


def run(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.config_values = _read_config(args.config) if getattr(args, "config", None) else {}
        for key in _PATH_KEYS:
            if hasattr(args, key) and getattr(args, key) in (None, "") and key in args.config_values:
                setattr(args, key, args.config_values[key])
        if getattr(args, "mode", None) in (None, "all") and "mode" in args.config_values:
            args.mode = args.config_values["mode"]
        return args.func(args)
    except (AsteError, FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
