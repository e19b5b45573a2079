"""Command-line interface.

Subcommands: generate-data, train, eval, predict, bench, gradcheck.  Every
command accepts ``--seed`` (overriding the seed in the config or grammar
file where one applies).  Exit code 0 on success; failures print exactly
one line ``error: <message>`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .bench import bench_forward, format_csv, synthetic_model
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import Config, ConfigError
from .corpus import (
    CorpusError,
    GrammarSpec,
    Sentence,
    generate_corpus,
    read_jsonl,
    type_names_for,
    write_jsonl,
)
from .entities import DecodeError, EntitySpan, SpanError
from .labeler import DataError
from .metrics import format_report
from .model import NestedNerModel
from .numerics.gradcheck import grad_check
from .training import TrainingError, evaluate_model, train

_FAILURES = (
    ConfigError,
    CorpusError,
    CheckpointError,
    TrainingError,
    DataError,
    DecodeError,
    SpanError,
    OSError,
    ValueError,
)


def _cmd_generate_data(args) -> int:
    spec = GrammarSpec.from_json(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    corpus = generate_corpus(spec)
    write_jsonl(args.out, corpus, type_names_for(spec))
    print(f"wrote {len(corpus)} sentences to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = Config.from_json(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    dataset = read_jsonl(args.data, config.type_names)
    model = NestedNerModel.build(config, dataset)
    result = train(
        model,
        dataset,
        early_stop_f1=args.early_stop_f1,
        on_epoch=(
            (lambda epoch, loss: print(f"epoch {epoch} loss {loss:.6f}"))
            if args.verbose
            else None
        ),
    )
    save_checkpoint(args.out, model)
    print(
        f"trained {result.epochs_run} epochs ({len(result.losses)} steps), "
        f"final loss {result.losses[-1]:.6f}, checkpoint {args.out}"
    )
    return 0


def _cmd_eval(args) -> int:
    model = load_checkpoint(args.ckpt)
    dataset = read_jsonl(args.data, model.config.type_names)
    report = evaluate_model(model, dataset)
    print(format_report(report, per_type=args.per_type,
                        per_relation=args.per_relation))
    return 0


def _cmd_predict(args) -> int:
    model = load_checkpoint(args.ckpt)
    sentences = read_jsonl(args.infile, model.config.type_names)
    predicted = [model.predict_sentence(sentence) for sentence in sentences]
    write_jsonl(args.out, predicted, model.config.type_names)
    print(f"wrote {len(predicted)} predictions to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    config = Config.from_json(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    try:
        sizes = [int(part) for part in args.sizes.split(",") if part]
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got "
                          f"{args.sizes!r}") from None
    if not sizes:
        raise ConfigError("--sizes must name at least one length")
    rows = bench_forward(config, sizes)
    print(format_csv(rows))
    return 0


def _cmd_gradcheck(args) -> int:
    config = Config.from_json(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    model = synthetic_model(config)
    tokens = [f"w{i}" for i in range(5)]
    pos = ["N", "V", "D", "N", "V"]
    spans = [EntitySpan(1, 2, 0)]
    if config.num_types > 1:
        spans.append(EntitySpan(1, 2, 1))
    sentence = Sentence(tuple(tokens), tuple(pos), frozenset(spans))
    report = grad_check(
        lambda: model.sentence_loss(sentence),
        model.store.parameters(),
        epsilon=args.eps,
    )
    passed = report.max_rel_error <= 1e-4
    print(
        f"max_rel_error={report.max_rel_error:.3e} "
        f"({'PASS' if passed else 'FAIL'} at 1e-4, eps={args.eps:g})"
    )
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starner",
        description="Nested named-entity tagger over a star-shaped graph.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **help_kw):
        p = sub.add_parser(name, **help_kw)
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed from the config/spec file")
        p.set_defaults(func=func)
        return p

    p = add("generate-data", _cmd_generate_data,
            help="sample a synthetic corpus from a grammar spec")
    p.add_argument("--spec", required=True, help="grammar spec JSON file")
    p.add_argument("--out", required=True, help="output JSONL data file")

    p = add("train", _cmd_train, help="train a model and save a checkpoint")
    p.add_argument("--config", required=True, help="config JSON file")
    p.add_argument("--data", required=True, help="training JSONL data file")
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--early-stop-f1", type=float, default=None,
                   help="stop once training-set micro-F1 reaches this value")
    p.add_argument("--verbose", action="store_true",
                   help="print a loss line per epoch")

    p = add("eval", _cmd_eval, help="score a checkpoint against a data file")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="evaluation JSONL data file")
    p.add_argument("--per-type", action="store_true",
                   help="also print one row per entity type")
    p.add_argument("--per-relation", action="store_true",
                   help="also print flat/NST/NDT/ME rows")

    p = add("predict", _cmd_predict, help="annotate sentences with entities")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--in", dest="infile", required=True,
                   help="input JSONL file")
    p.add_argument("--out", required=True, help="output JSONL file")

    p = add("bench", _cmd_bench,
            help="time forward passes across sentence lengths")
    p.add_argument("--config", required=True, help="config JSON file")
    p.add_argument("--sizes", required=True,
                   help="comma-separated ascending sentence lengths")

    p = add("gradcheck", _cmd_gradcheck,
            help="compare analytic gradients with finite differences")
    p.add_argument("--config", required=True, help="config JSON file")
    p.add_argument("--eps", type=float, default=1e-5,
                   help="finite-difference step size")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _FAILURES as err:
        message = " ".join(str(err).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
