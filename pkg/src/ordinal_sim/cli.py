"""Command line: ``buckets``, ``synth``, ``train``, ``eval`` and ``predict``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Output files are written to temporaries and renamed only once every
artifact of a command is ready, so a failing command leaves nothing behind.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bucketing, data, training
from .errors import ConfigError, DataFormatError, OrdinalSimError
from .metrics import evaluate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _commit(files: dict) -> list[str]:
    """Atomically write ``{path: text}``; on failure remove every temporary."""
    temps = []
    try:
        for path, text in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            temps.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
        for tmp, path in temps:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    return [str(p) for p in files]


def _render(writer, obj) -> str:
    """Render an object through a path-based writer into a string."""
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "out"
        writer(obj, path)
        return path.read_text(encoding="utf-8")


# -- commands ----------------------------------------------------------------

def cmd_buckets(args) -> int:
    if args.paper:
        scheme = bucketing.paper_scheme()
    else:
        if args.input is None or args.k is None:
            raise UsageError("either --paper or both --input and --k are required")
        if args.k < 2:
            raise UsageError(f"--k must be >= 2, got {args.k}")
        instances = data.parse_dataset(args.input, args.has_categories)
        y = np.array([inst.y for inst in instances])
        scheme = bucketing.derive_quantile_scheme(y, args.k)
    _commit({args.out: _render(bucketing.save_scheme, scheme)})
    print("boundaries " + " ".join(repr(b) for b in scheme.boundaries))
    if not args.paper:
        counts = bucketing.bucket_counts(scheme, y)
        print("counts " + " ".join(str(c) for c in counts))
    return EXIT_OK


def cmd_synth(args) -> int:
    config = data.SynthConfig(vocab_size=args.vocab_size, d=args.dim, n_pairs=args.n_pairs,
                              skew=args.skew, seed=args.seed)
    table, instances = data.generate_synthetic(config)
    split_seed = int(np.random.SeedSequence([args.seed, 7]).generate_state(1)[0])
    train, val, test = data.split_622(instances, seed=split_seed)
    out = Path(args.out_dir)
    _commit({
        out / "embeddings.txt": _render(data.save_embeddings, table),
        out / "train.tsv": _render(data.write_dataset, train),
        out / "val.tsv": _render(data.write_dataset, val),
        out / "test.tsv": _render(data.write_dataset, test),
    })
    print(f"wrote {len(train)}/{len(val)}/{len(test)} pairs and {len(table)} embeddings to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = training.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    for key in ("scheme_path", "train_path", "val_path", "embeddings_path"):
        if getattr(config, key) is None:
            raise UsageError(f"config is missing {key!r}")
    ref = lambda key: training.resolve_path(args.config, getattr(config, key))  # noqa: E731
    scheme = bucketing.load_scheme(ref("scheme_path"))
    table = data.load_embeddings(ref("embeddings_path"))
    train_set = data.parse_dataset(ref("train_path"), config.has_categories)
    val_set = data.parse_dataset(ref("val_path"), config.has_categories)
    params, tlog = training.train(config, train_set, val_set, table, scheme)
    _commit({
        args.checkpoint: _render(lambda p, path: training.save_model(path, p, config, scheme), params),
        args.log: tlog.to_text(),
    })
    best = tlog.records[tlog.best_epoch - 1]
    print(f"best epoch {tlog.best_epoch} ({tlog.stop_reason}): val loss {best.val_loss:.6g}, "
          f"val MALE {best.val_male:.4f}")
    return EXIT_OK


def _model_inputs(args):
    params, config, scheme = training.load_model(args.checkpoint)
    if getattr(args, "scheme", None):
        override = bucketing.load_scheme(args.scheme)
        if override.K != scheme.K:
            raise UsageError(f"scheme has K={override.K} but the checkpoint was trained with K={scheme.K}")
        scheme = override
    return params, config, scheme, data.load_embeddings(args.embeddings)


def cmd_eval(args) -> int:
    params, config, scheme, table = _model_inputs(args)
    instances = data.parse_dataset(args.dataset, config.has_categories)
    yhat, _, kept = training.predict_with_index(params, instances, table, config.layout, scheme)
    if kept.size == 0:
        raise DataFormatError("no instance could be embedded", args.dataset)
    y = np.array([instances[i].y for i in kept])
    report = evaluate(yhat, y, scheme)
    _commit({args.out: report.to_text()})
    print(f"MALE {report.male:.17g}")
    return EXIT_OK


def cmd_predict(args) -> int:
    params, config, scheme, table = _model_inputs(args)
    if args.dataset:
        instances = data.parse_dataset(args.dataset, config.has_categories, require_y=False)
    elif args.pair:
        if config.has_categories:
            raise UsageError("--pair literals carry no categories; this model needs --dataset")
        instances = [data.Instance(q1, q2) for q1, q2 in args.pair]
    else:
        raise UsageError("give --dataset or at least one --pair")
    yhat, labels, kept = training.predict_with_index(params, instances, table, config.layout, scheme)
    lines = ["q1\tq2\tyhat\tlabel"]
    for i, v, lab in zip(kept, yhat, labels):
        lines.append(f"{instances[i].q1}\t{instances[i].q2}\t{float(v)!r}\t{int(lab)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _commit({args.out: text})
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ordinal-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("buckets", help="write a bucket scheme file")
    p.add_argument("--input", help="TSV dataset whose similarities define quantile buckets")
    p.add_argument("--k", type=int, help="number of buckets (>= 2)")
    p.add_argument("--paper", action="store_true",
                   help="emit the fixed scheme (0,.82] (.82,.90] (.90,.95] (.95,.97] (.97,1]")
    p.add_argument("--has-categories", action="store_true", help="dataset has category columns")
    p.add_argument("--out", required=True, help="scheme JSON to write")
    p.set_defaults(func=cmd_buckets)

    p = sub.add_parser("synth", help="generate embeddings and train/val/test TSVs (6:2:2)")
    p.add_argument("--out-dir", required=True, help="directory for embeddings.txt and *.tsv")
    p.add_argument("--n-pairs", type=int, default=10_000, help="total number of pairs")
    p.add_argument("--vocab-size", type=int, default=1000, help="number of random tokens")
    p.add_argument("--dim", type=int, default=32, help="embedding dimension")
    p.add_argument("--skew", type=float, default=0.95, help="probability of keeping each q1 token in q2")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True, help="JSON training config")
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON to write")
    p.add_argument("--log", required=True, help="per-epoch training log to write")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labelled dataset")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint")
    p.add_argument("--dataset", required=True, help="TSV dataset with similarities")
    p.add_argument("--embeddings", required=True, help="embedding file in word2vec text format")
    p.add_argument("--scheme", help="bucket scheme (default: the checkpoint's); K must match")
    p.add_argument("--out", required=True, help="report file to write")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="predict similarities for query pairs")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint")
    p.add_argument("--dataset", help="TSV of q1, q2 [, cat1, cat2] without similarities")
    p.add_argument("--pair", nargs=2, action="append", metavar=("Q1", "Q2"),
                   help="a query pair literal; may be repeated")
    p.add_argument("--embeddings", required=True, help="embedding file in word2vec text format")
    p.add_argument("--scheme", help="bucket scheme for labels (default: the checkpoint's)")
    p.add_argument("--out", help="TSV to write (default: standard output)")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OrdinalSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UnicodeDecodeError as exc:
        print(f"error: input is not UTF-8: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
