"""``conceptvec`` command line: vocabulary, training, BOC building,
densification, similarity queries and both evaluations.

Exit codes: 0 success, 1 domain error (empty vocabulary, no embeddable
concepts, vocabulary/corpus mismatch), 2 usage or input-format error.
A flat ``key = value`` file given with ``--config`` supplies defaults for
the chosen subcommand; flags on the command line win.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .boc import build_boc, build_index, read_boc_file, sparse_cosine, write_boc_file
from .corpus import RedirectMap, build_vocabulary, corpus_streams, read_corpus, ParseStats
from .corpus import Vocabulary
from .densify import AlignmentConfig, alignment_similarity, dense_cosine, matrix_densify
from .embeddings import BINARY, TEXT, load_embeddings, save_embeddings, save_vectors
from .errors import DomainError, FormatError
from .evaluation import (classify_dataless, dimension_sweep, evaluate_relatedness,
                         load_dataless_task, make_strategy, read_relatedness, score_at)
from .trainer import TrainConfig, train, vocabulary_gaps

logger = logging.getLogger("conceptvec")

MECHANISMS = ("dense", "sparse", "max", "hungarian", "many")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("dimensions must be positive integers")
    return sorted(set(out))


def read_config(path) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise FormatError("expected 'key = value'", lineno, path)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


# ---------------------------------------------------------------------------
# subcommands


def _load_docs(args):
    redirects = RedirectMap.from_tsv(args.redirects) if args.redirects else None
    stats = ParseStats()
    docs = read_corpus(args.corpus, redirects, stats)
    logger.info("parsed %d documents (%d empty skipped, %d mentions, %d redirected)",
                stats.documents, stats.skipped_empty, stats.mentions, stats.redirected)
    return docs


def cmd_build_vocab(args):
    streams = corpus_streams(_load_docs(args), args.mode)
    vocab = build_vocabulary(streams, args.min_count,
                             "concepts" if args.mode == "3c" else "all")
    vocab.save(args.out)
    logger.info("wrote %d entries to %s", len(vocab), args.out)


def cmd_train(args):
    try:
        cfg = TrainConfig(dim=args.dim, window=args.window, epochs=args.epochs,
                          negatives=args.negatives, initial_lr=args.lr, min_lr=args.min_lr,
                          seed=args.seed, workers=args.workers, model=args.model,
                          sample=args.sample)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    logger.info("train settings: %s", cfg.describe())
    streams = corpus_streams(_load_docs(args), cfg.model)
    vocab = Vocabulary.load(args.vocab)
    gaps = vocabulary_gaps(streams, vocab)
    if gaps:
        raise DomainError(f"vocabulary does not match corpus for model {cfg.model}: "
                          f"{len(gaps)} keys never occur (e.g. {gaps[:3]})")
    store = train(streams, vocab, cfg)
    save_embeddings(store, args.out, args.format)
    logger.info("wrote %d x %d embeddings to %s", len(store), store.dim, args.out)


def cmd_build_boc(args):
    redirects = RedirectMap.from_tsv(args.redirects) if args.redirects else None
    index = build_index(read_corpus(args.concepts, redirects))
    records = []
    with open(args.texts, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            rid, sep, text = line.partition("\t")
            if not sep or not rid:
                raise FormatError("expected record_id<TAB>text", lineno, args.texts)
            records.append((rid, build_boc(text, index, args.top_n)))
    empty = sum(1 for _, b in records if len(b) == 0)
    if empty:
        logger.warning("%d records have no concept with positive weight", empty)
    write_boc_file(records, args.out)
    logger.info("wrote %d BOC records to %s", len(records), args.out)


def cmd_densify(args):
    records = read_boc_file(args.boc)
    store = load_embeddings(args.embeddings)
    batch = matrix_densify([b for _, b in records], store)
    for i, msg in sorted(batch.errors.items()):
        logger.warning("record %s: %s", records[i][0], msg)
    ok = batch.ok()
    if not ok:
        raise DomainError("no embeddable concepts in any record")
    skipped = sum(batch.skipped[i] for i in ok)
    save_vectors([records[i][0] for i in ok], [batch.vectors[i] for i in ok], args.out,
                 args.format)
    logger.info("densified %d/%d records (%d concepts without embeddings skipped)",
                len(ok), len(records), skipped)


def cmd_sim(args):
    store = load_embeddings(args.embeddings) if args.embeddings else None
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None or store is None:
            raise UsageError("--a/--b need both keys and --embeddings")
        try:
            value = dense_cosine(store.vector(args.a), store.vector(args.b))
        except KeyError as exc:
            raise DomainError(f"no embedding for {exc.args[0]!r}") from None
    else:
        if not (args.boc and args.boc_a and args.boc_b):
            raise UsageError("give --a/--b, or --boc with --boc-a/--boc-b")
        records = dict(read_boc_file(args.boc))
        try:
            u, v = records[args.boc_a], records[args.boc_b]
        except KeyError as exc:
            raise DomainError(f"no BOC record {exc.args[0]!r}") from None
        if args.mechanism == "sparse":
            value = sparse_cosine(u, v)
        elif store is None:
            raise UsageError(f"mechanism {args.mechanism!r} needs --embeddings")
        elif args.mechanism == "dense":
            strategy = make_strategy("dense", store)
            value = dense_cosine(strategy.prepare(u), strategy.prepare(v))
        else:
            value = alignment_similarity(u, v, store, AlignmentConfig(args.tau, args.mechanism))
    print(f"{value:.6f}")


def _emit(report, args):
    csv_text = report.to_csv()
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
        print(report.table())
    else:
        sys.stdout.write(csv_text)
        print(report.table(), file=sys.stderr)


def cmd_eval_relatedness(args):
    store = load_embeddings(args.embeddings)
    report = evaluate_relatedness(read_relatedness(args.dataset), store, ks=args.ks)
    _emit(report, args)


def cmd_eval_dataless(args):
    if args.strategy != "sparse" and not args.embeddings:
        raise UsageError(f"strategy {args.strategy!r} needs --embeddings")
    if args.strategy == "sparse" and args.embeddings:
        logger.warning("--embeddings ignored for the sparse strategy")
    store = load_embeddings(args.embeddings) if args.strategy != "sparse" else None
    task, dropped = load_dataless_task(args.labels, args.instances, args.gold,
                                       args.category_map)
    logger.info("task: %d labels, %d instances (%d outside the label set)",
                len(task.labels), len(task.instances), dropped)
    if not task.instances:
        raise DomainError("no instance has a gold label among the task labels")
    strategy = make_strategy(args.strategy, store, args.tau)
    if args.sweep:
        report = dimension_sweep(task, strategy, args.sweep)
        logger.info("best %s", score_at(report.sweep))
    else:
        report = classify_dataless(task, strategy)
    _emit(report, args)


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(prog="conceptvec", description=__doc__.split("\n\n")[0].replace("\n", " "))
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat key = value file with subcommand defaults")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    def corpus_args(p):
        p.add_argument("--corpus", required=True)
        p.add_argument("--redirects")

    p = add("build-vocab", cmd_build_vocab, "count tokens and write a vocabulary TSV")
    corpus_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("crc", "3c"), default="crc")
    p.add_argument("--min-count", type=int, default=None,
                   help="applies to every entry (default: 5 for words, 1 for concepts)")

    p = add("train", cmd_train, "train CRC or 3C embeddings")
    corpus_args(p)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=("crc", "3c"), default="crc")
    p.add_argument("--dim", type=int, default=500)
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-lr", type=float, default=1e-4)
    p.add_argument("--sample", type=float, default=0.0,
                   help="frequent-token subsampling threshold (0 disables)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--format", choices=(BINARY, TEXT), default=BINARY)

    p = add("build-boc", cmd_build_boc, "map texts to sparse BOC vectors via a TF-IDF index")
    p.add_argument("--concepts", required=True, help="corpus with one article per concept")
    p.add_argument("--redirects")
    p.add_argument("--texts", required=True, help="TSV record_id<TAB>text")
    p.add_argument("--top-n", type=int, default=500)
    p.add_argument("--out", required=True)

    p = add("densify", cmd_densify, "turn BOC records into dense vectors")
    p.add_argument("--boc", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=(BINARY, TEXT), default=TEXT)

    p = add("sim", cmd_sim, "similarity between two embeddings or two BOC records")
    p.add_argument("--embeddings")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--boc", help="BOC file holding --boc-a and --boc-b")
    p.add_argument("--boc-a")
    p.add_argument("--boc-b")
    p.add_argument("--mechanism", choices=MECHANISMS, default="dense")
    p.add_argument("--tau", type=float, default=0.85)

    p = add("eval-relatedness", cmd_eval_relatedness, "nDCG@k and MAP on a relatedness set")
    p.add_argument("--dataset", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--ks", type=_int_list, default=[1, 5, 10])
    p.add_argument("--csv")

    p = add("eval-dataless", cmd_eval_dataless, "dataless classification, optionally swept")
    p.add_argument("--labels", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--category-map")
    p.add_argument("--embeddings")
    p.add_argument("--strategy", choices=MECHANISMS, default="dense")
    p.add_argument("--sweep", type=_int_list)
    p.add_argument("--tau", type=float, default=0.85)
    p.add_argument("--csv")
    return parser, subs


def _setup_logging(args):
    level = os.environ.get("CONCEPTVEC_LOG", "INFO").upper()
    if args.verbose:
        level = "DEBUG"
    if args.quiet:
        level = "WARNING"
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR"):
        level = "INFO"
    root = logging.getLogger("conceptvec")
    root.handlers[:] = []
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config(args.config)
        except (OSError, FormatError) as exc:
            print(f"conceptvec: error: {exc}", file=sys.stderr)
            return 2
        known = {a.dest for a in subs[args.command]._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            print(f"conceptvec: error: unknown config keys {unknown}", file=sys.stderr)
            return 2
        subs[args.command].set_defaults(**values)
        args = parser.parse_args(argv)
    _setup_logging(args)
    settings = {k: v for k, v in vars(args).items() if k not in ("func", "verbose", "quiet")}
    logger.info("conceptvec %s %s", args.command,
                " ".join(f"{k}={v}" for k, v in settings.items()))
    try:
        args.func(args)
    except DomainError as exc:
        logger.error("%s", exc)
        return 1
    except (FormatError, UsageError, OSError, ValueError) as exc:
        logger.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
