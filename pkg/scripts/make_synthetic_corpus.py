#!/usr/bin/env python3
"""Generate a synthetic multi-node corpus with two planted topic communities.

Each node's file holds sentences drawn from one topic's word family (alpha* or
beta*, Zipf-weighted), with a few shared filler words sprinkled everywhere.
Nodes in the first half use the alpha family, the rest beta, so a model trained
across all nodes should place each family in its own neighborhood.

Usage:
    python scripts/make_synthetic_corpus.py --out-dir data --nodes 10
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np


def node_text(
    rng: np.random.Generator,
    topic_words: list[str],
    filler_words: list[str],
    tokens: int,
    filler_rate: float = 0.12,
) -> str:
    weights = 1.0 / np.power(np.arange(1, len(topic_words) + 1), 0.7)
    weights /= weights.sum()
    lines = []
    count = 0
    while count < tokens:
        length = int(rng.integers(8, 20))
        picks = rng.choice(len(topic_words), size=length, p=weights)
        words = [topic_words[i] for i in picks]
        for pos in range(length):
            if filler_words and rng.random() < filler_rate:
                words[pos] = filler_words[int(rng.integers(len(filler_words)))]
        lines.append(" ".join(words))
        count += length
    return "\n".join(lines) + "\n"


def write_corpus(
    out_dir: Path,
    nodes: int = 10,
    tokens_per_node: int = 10_000,
    words_per_topic: int = 50,
    shared_words: int = 8,
    seed: int = 0,
) -> list[Path]:
    rng = np.random.default_rng(seed)
    topics = [
        [f"alpha{i:02d}" for i in range(words_per_topic)],
        [f"beta{i:02d}" for i in range(words_per_topic)],
    ]
    filler = [f"filler{i:02d}" for i in range(shared_words)]
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for node in range(nodes):
        topic = topics[0] if node < nodes // 2 else topics[1]
        path = out_dir / f"node{node:02d}.txt"
        path.write_text(node_text(rng, topic, filler, tokens_per_node), encoding="utf-8")
        paths.append(path)
    return paths


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("data"))
    parser.add_argument("--nodes", type=int, default=10)
    parser.add_argument("--tokens-per-node", type=int, default=10_000)
    parser.add_argument("--words-per-topic", type=int, default=50)
    parser.add_argument("--shared-words", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    paths = write_corpus(
        args.out_dir,
        nodes=args.nodes,
        tokens_per_node=args.tokens_per_node,
        words_per_topic=args.words_per_topic,
        shared_words=args.shared_words,
        seed=args.seed,
    )
    print(f"wrote {len(paths)} node corpora to {args.out_dir}")


if __name__ == "__main__":
    main()
