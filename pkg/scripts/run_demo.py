#!/usr/bin/env python3
"""End-to-end demo: vocabulary agreement, federated training, and neighbors.

Generates a two-topic corpus split over N nodes, runs the full pipeline
(per-node proposals -> merged vocabulary -> federated training), then prints
the validation-loss trajectory and the nearest neighbors of a few probe words.
Also trains a single-node centralized baseline on node 0's shard for
comparison.

Usage:
    python scripts/run_demo.py --workdir demo --nodes 10 --iters 2000
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from make_synthetic_corpus import write_corpus

from fedvec.corpus import count_words, encode, read_corpus
from fedvec.evaluation import export_embeddings, nearest_neighbors
from fedvec.fed import TrainingConfig, run_centralized, run_federated
from fedvec.vocab import build_proposal, merge_proposals, save_vocabulary


def loss_summary(records, label):
    losses = [r.validation_loss for r in records if r.node_id == "global"]
    if not losses:
        print(f"{label}: no validation records")
        return
    tail = max(1, len(losses) // 10)
    first = sum(losses[:tail]) / tail
    last = sum(losses[-tail:]) / tail
    print(
        f"{label}: start {losses[0]:.1f} -> end {losses[-1]:.1f} "
        f"(first-10% mean {first:.1f}, last-10% mean {last:.1f}, "
        f"drop {1 - last / first:.1%})"
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", type=Path, default=Path("demo"))
    parser.add_argument("--nodes", type=int, default=10)
    parser.add_argument("--tokens-per-node", type=int, default=10_000)
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--neg", type=int, default=8)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--window", type=int, default=5)
    parser.add_argument("--val-interval", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--probes",
        nargs="+",
        default=["alpha00", "alpha07", "beta00", "beta07", "filler00"],
    )
    args = parser.parse_args()

    corpus_dir = args.workdir / "corpus"
    paths = write_corpus(
        corpus_dir, nodes=args.nodes, tokens_per_node=args.tokens_per_node, seed=args.seed
    )
    streams = [read_corpus(path) for path in paths]

    # Vocabulary agreement: each node proposes its frequent words, only the
    # unordered union crosses node boundaries.
    proposals = [
        build_proposal(count_words(s), cap=500, threshold=10, origin=s.source_id)
        for s in streams
    ]
    vocab = merge_proposals(proposals, "union")
    save_vocabulary(vocab, args.workdir / "vocab.txt")
    sizes = sorted(len(p.words) for p in proposals)
    print(f"proposals of {sizes[0]}..{sizes[-1]} words merged into {len(vocab)}")

    datasets = [encode(s, vocab) for s in streams]
    config = TrainingConfig(
        nodes=args.nodes,
        batch_size=args.batch,
        dim=args.dim,
        negatives=args.neg,
        vocab_cap=500,
        vocab_threshold=10,
        learning_rate=args.lr,
        window=args.window,
        total_iterations=args.iters,
        validation_interval=args.val_interval,
        seed=args.seed,
    )

    start = time.perf_counter()
    params, records = run_federated(datasets, vocab, config)
    print(f"federated training: {args.iters} rounds in {time.perf_counter() - start:.1f}s")
    loss_summary(records, "federated")

    start = time.perf_counter()
    _, baseline_records = run_centralized(datasets[0], vocab, config)
    print(f"centralized baseline (node 0 only): {time.perf_counter() - start:.1f}s")
    loss_summary(baseline_records, "centralized")

    export_embeddings(params, vocab, "input", args.workdir / "input_embeddings.txt")
    print(f"embeddings written to {args.workdir / 'input_embeddings.txt'}")

    for probe in args.probes:
        if probe not in vocab:
            print(f"{probe}: not in vocabulary")
            continue
        result = nearest_neighbors(params, probe, 5, vocab)
        shown = ", ".join(f"{w} ({d:.3f})" for w, d in result.neighbors)
        print(f"{probe}: {shown}")


if __name__ == "__main__":
    main()
