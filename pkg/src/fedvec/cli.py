"""Command line interface.

Subcommands: propose, merge, train, neighbors, export. Exit codes: 0 on
success, 1 for usage or validation errors, 2 for runtime failures. Every
output file is written atomically, and a train run leaves a manifest that
reproduces it byte for byte via --config.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import count_words, encode, read_corpus, save_counts
from .evaluation import export_embeddings, import_embeddings, nearest_neighbors
from .fed import LossRecord, TrainingConfig, run_centralized, run_federated
from .ioutil import atomic_write_text
from .sgns import ModelParams
from .vocab import (
    build_proposal,
    load_proposal,
    load_vocabulary,
    merge_proposals,
    save_proposal,
    save_vocabulary,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route to exit code 1
        raise UsageError(message)


# config-file key -> (TrainingConfig field, parser)
_CONFIG_KEYS = {
    "nodes": ("nodes", int),
    "batch": ("batch_size", int),
    "dim": ("dim", int),
    "neg": ("negatives", int),
    "vocab_cap": ("vocab_cap", int),
    "vocab_threshold": ("vocab_threshold", int),
    "lr": ("learning_rate", float),
    "window": ("window", int),
    "iters": ("total_iterations", int),
    "val_interval": ("validation_interval", int),
    "seed": ("seed", int),
    "negative_power": ("negative_power", float),
    "dynamic_window": ("dynamic_window", None),
    "heldout_fraction": ("heldout_fraction", float),
    "log_per_node": ("log_per_node", None),
}
_RUN_KEYS = ("mode", "vocab", "datasets", "version")


def _parse_bool(value: str, key: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise UsageError(f"config key {key!r} must be 'true' or 'false'")


def _load_config_file(path: str) -> dict:
    if not os.path.isfile(path):
        raise UsageError(f"no such config file: {path}")
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno} is not key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _CONFIG_KEYS:
            field, caster = _CONFIG_KEYS[key]
            try:
                values[field] = _parse_bool(value, key) if caster is None else caster(value)
            except ValueError as exc:
                raise UsageError(f"bad value for config key {key!r}: {value!r}") from exc
        elif key == "datasets":
            values["datasets"] = [p for p in value.split(",") if p]
        elif key in _RUN_KEYS:
            values[key] = value
        else:
            raise UsageError(f"unknown config key {key!r}")
    return values


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise UsageError(f"no such {what}: {path}")


def cmd_propose(args) -> int:
    if args.vocab_cap < 1 or args.vocab_threshold < 1:
        raise UsageError("--vocab-cap and --vocab-threshold must be >= 1")
    _require_file(args.corpus, "corpus file")
    stream = read_corpus(args.corpus, args.source_id)
    counts = count_words(stream)
    qualifying = sum(1 for c in counts.entries.values() if c >= args.vocab_threshold)
    proposal = build_proposal(
        counts, args.vocab_cap, args.vocab_threshold, origin=stream.source_id
    )
    save_proposal(proposal, args.out)
    if args.counts_out:
        save_counts(counts, args.counts_out)
    print(f"{qualifying} qualifying words, proposal size {len(proposal.words)}")
    return 0


def cmd_merge(args) -> int:
    if args.vocab_cap < 1 or args.vocab_threshold < 1:
        raise UsageError("--vocab-cap and --vocab-threshold must be >= 1")
    if not args.proposals:
        raise UsageError("need at least one proposal file")
    for path in args.proposals:
        _require_file(path, "proposal file")
    proposals = [
        load_proposal(path, args.vocab_cap, args.vocab_threshold)
        for path in args.proposals
    ]
    vocab = merge_proposals(proposals, args.mode)
    save_vocabulary(vocab, args.out)
    ratio = len(vocab) / args.vocab_cap
    print(f"vocabulary size {len(vocab)} ({ratio:.4f} of cap)")
    return 0


def _loss_csv(records: list[LossRecord]) -> str:
    lines = ["iteration,epoch,node,loss"]
    lines.extend(
        f"{r.iteration},{r.epoch},{r.node_id},{r.validation_loss!r}" for r in records
    )
    return "\n".join(lines) + "\n"


def _manifest_text(mode: str, vocab_path: str, datasets: list[str], config: TrainingConfig) -> str:
    lines = [
        "# fedvec run manifest; rerun with: fedvec train --config <this file> --out <dir>",
        f"version={__version__}",
        f"mode={mode}",
        f"vocab={vocab_path}",
        "datasets=" + ",".join(datasets),
        f"nodes={config.nodes}",
        f"batch={config.batch_size}",
        f"dim={config.dim}",
        f"neg={config.negatives}",
        f"vocab_cap={config.vocab_cap}",
        f"vocab_threshold={config.vocab_threshold}",
        f"lr={config.learning_rate!r}",
        f"window={config.window}",
        f"iters={config.total_iterations}",
        f"val_interval={config.validation_interval}",
        f"seed={config.seed}",
        f"negative_power={config.negative_power!r}",
        f"dynamic_window={'true' if config.dynamic_window else 'false'}",
        f"heldout_fraction={config.heldout_fraction!r}",
        f"log_per_node={'true' if config.log_per_node else 'false'}",
        "# artifacts: loss.csv input_embeddings.txt output_embeddings.txt vocab.txt",
    ]
    return "\n".join(lines) + "\n"


def cmd_train(args) -> int:
    filed = _load_config_file(args.config) if args.config else {}

    mode = args.mode if args.mode is not None else filed.get("mode")
    if mode is None:
        raise UsageError("--mode is required (federated or centralized)")
    if mode not in ("federated", "centralized"):
        raise UsageError(f"unknown mode {mode!r}")
    datasets = list(args.datasets) if args.datasets else filed.get("datasets", [])
    if not datasets:
        raise UsageError("no dataset files given")
    vocab_path = args.vocab if args.vocab is not None else filed.get("vocab")
    if vocab_path is None:
        raise UsageError("--vocab is required")
    if args.out is None:
        raise UsageError("--out is required")

    flag_fields = {
        "nodes": args.nodes,
        "batch_size": args.batch,
        "dim": args.dim,
        "negatives": args.neg,
        "vocab_cap": args.vocab_cap,
        "vocab_threshold": args.vocab_threshold,
        "learning_rate": args.lr,
        "window": args.window,
        "total_iterations": args.iters,
        "validation_interval": args.val_interval,
        "seed": args.seed,
    }
    fields = {}
    for field, _ in _CONFIG_KEYS.values():
        flag_value = flag_fields.get(field)
        if flag_value is not None:
            fields[field] = flag_value
        elif field in filed:
            fields[field] = filed[field]
    config = TrainingConfig(**fields)
    config.validate()

    _require_file(vocab_path, "vocabulary file")
    for path in datasets:
        _require_file(path, "dataset file")
    if mode == "federated" and len(datasets) != config.nodes:
        raise UsageError(
            f"federated mode needs --nodes datasets: got {len(datasets)}, expected {config.nodes}"
        )
    if mode == "centralized" and len(datasets) != 1:
        raise UsageError("centralized mode takes exactly one dataset")

    vocab = load_vocabulary(vocab_path)
    encoded = [encode(read_corpus(path), vocab) for path in datasets]
    if mode == "federated":
        params, records = run_federated(encoded, vocab, config)
    else:
        params, records = run_centralized(encoded[0], vocab, config)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "loss.csv", _loss_csv(records))
    export_embeddings(params, vocab, "input", out_dir / "input_embeddings.txt")
    export_embeddings(params, vocab, "output", out_dir / "output_embeddings.txt")
    save_vocabulary(vocab, out_dir / "vocab.txt")
    atomic_write_text(out_dir / "manifest.txt", _manifest_text(mode, vocab_path, datasets, config))
    final = records[-1].validation_loss if records else float("nan")
    print(f"trained {config.total_iterations} iterations ({mode}); final validation loss {final:.6g}")
    print(f"artifacts in {out_dir}")
    return 0


def _load_checkpoint(checkpoint: str, which: str):
    directory = Path(checkpoint)
    if not directory.is_dir():
        raise UsageError(f"no such checkpoint directory: {checkpoint}")
    name = "input_embeddings.txt" if which == "input" else "output_embeddings.txt"
    _require_file(str(directory / name), "embedding file")
    _require_file(str(directory / "vocab.txt"), "vocabulary file")
    matrix, words = import_embeddings(directory / name)
    vocab = load_vocabulary(directory / "vocab.txt")
    if list(words) != list(vocab.words):
        raise ValueError("checkpoint embeddings and vocabulary disagree")
    return matrix, vocab


def cmd_neighbors(args) -> int:
    if args.k < 1:
        raise UsageError("-k must be >= 1")
    matrix, vocab = _load_checkpoint(args.checkpoint, "input")
    params = ModelParams(matrix, np.zeros_like(matrix))
    hits = 0
    for word in args.words:
        try:
            result = nearest_neighbors(params, word, args.k, vocab)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            continue
        hits += 1
        print(f"query\t{word}")
        for rank, (neighbor, dist) in enumerate(result.neighbors, 1):
            print(f"{rank}\t{neighbor}\t{dist:.6f}")
        print()
    return 0 if hits else 1


def cmd_export(args) -> int:
    if args.which not in ("input", "output"):
        raise UsageError("--which must be input or output")
    matrix, vocab = _load_checkpoint(args.checkpoint, args.which)
    zero = np.zeros_like(matrix)
    params = (
        ModelParams(matrix, zero) if args.which == "input" else ModelParams(zero, matrix)
    )
    export_embeddings(params, vocab, args.which, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="fedvec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fedvec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propose", help="build one organization's vocabulary proposal")
    p.add_argument("corpus", help="UTF-8 text file, one document per line")
    p.add_argument("--vocab-cap", type=int, default=TrainingConfig.vocab_cap)
    p.add_argument("--vocab-threshold", type=int, default=TrainingConfig.vocab_threshold)
    p.add_argument("--out", required=True, help="proposal file to write")
    p.add_argument("--counts-out", default=None, help="optional TSV of word counts")
    p.add_argument("--source-id", default=None)
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("merge", help="merge proposals into the shared vocabulary")
    p.add_argument("proposals", nargs="+", help="proposal files, one per organization")
    p.add_argument("--mode", choices=("union", "intersection"), default="union")
    p.add_argument("--vocab-cap", type=int, default=TrainingConfig.vocab_cap)
    p.add_argument("--vocab-threshold", type=int, default=TrainingConfig.vocab_threshold)
    p.add_argument("--out", required=True, help="vocabulary file to write")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("train", help="train embeddings over one or more datasets")
    p.add_argument("datasets", nargs="*", help="dataset text files, one per node")
    p.add_argument("--mode", choices=("federated", "centralized"), default=None)
    p.add_argument("--vocab", default=None, help="shared vocabulary file")
    p.add_argument("--out", default=None, help="output directory for all artifacts")
    p.add_argument("--config", default=None, help="key=value config file; flags override it")
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--neg", type=int, default=None)
    p.add_argument("--vocab-cap", type=int, default=None)
    p.add_argument("--vocab-threshold", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--val-interval", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("neighbors", help="query nearest neighbors from a checkpoint")
    p.add_argument("words", nargs="+", help="query words")
    p.add_argument("--checkpoint", required=True, help="train output directory")
    p.add_argument("-k", type=int, default=5, help="neighbors per query (default 5)")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("export", help="re-export a checkpoint matrix to a file")
    p.add_argument("--checkpoint", required=True, help="train output directory")
    p.add_argument("--which", choices=("input", "output"), default="input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # I/O failures and the like
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
