"""Model evaluation: frozen held-out loss, cosine-distance neighbors, and a
plain-text embedding file format with exact round trips."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import enumerate_pairs
from .ioutil import atomic_write_text
from .sgns import ModelParams, NegativeTable, draw_negatives
from .vocab import GlobalVocabulary


@dataclass
class HeldoutSet:
    """Validation pairs with noise ids frozen once, before training."""

    pairs: np.ndarray  # (P, 2)
    negatives: np.ndarray  # (P, K)

    def __post_init__(self) -> None:
        if self.pairs.ndim != 2 or self.pairs.shape[1] != 2:
            raise ValueError("pairs must have shape (P, 2)")
        if self.negatives.ndim != 2 or self.negatives.shape[0] != self.pairs.shape[0]:
            raise ValueError("negatives must have shape (P, K) aligned with pairs")

    @property
    def size(self) -> int:
        return self.pairs.shape[0]


def build_heldout(
    indices: np.ndarray,
    table: NegativeTable,
    num_negatives: int,
    window: int,
    fraction: float,
    rng: np.random.Generator,
    dynamic: bool = True,
) -> tuple[HeldoutSet, np.ndarray]:
    """Freeze a validation set before training starts.

    Reserves a seeded random ``fraction`` of center positions, enumerates
    their pairs once, and fixes their noise draws. Returns the held-out set
    plus the reserved positions, which the training stream must exclude so
    the two never share a pair.
    """
    data = np.asarray(indices, dtype=np.int64)
    n = data.size
    if n < 2:
        raise ValueError("need at least two tokens to hold out pairs")
    if not 0 < fraction < 1:
        raise ValueError("held-out fraction must be in (0, 1)")
    k = min(max(1, round(n * fraction)), n - 1)
    reserved = np.sort(rng.choice(n, size=k, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[reserved] = True
    pairs = enumerate_pairs(data, window, rng, dynamic=dynamic, center_mask=mask)
    negatives = draw_negatives(table, pairs[:, 1], rng, num_negatives)
    return HeldoutSet(pairs, negatives), reserved


def validation_loss(params: ModelParams, heldout: HeldoutSet) -> float:
    """Summed SGNS loss over the frozen held-out pairs; no gradient, no mutation."""
    if heldout.size == 0:
        raise ValueError("held-out set is empty")
    vocab_size = params.vocab_size
    centers = heldout.pairs[:, 0]
    contexts = heldout.pairs[:, 1]
    negatives = heldout.negatives
    for name, arr in (("center", centers), ("context", contexts), ("negative", negatives)):
        if arr.size and (arr.min() < 0 or arr.max() >= vocab_size):
            raise ValueError(f"{name} id out of range for vocabulary of {vocab_size}")
    v = params.input_embeddings[centers]
    u_ctx = params.output_embeddings[contexts]
    u_neg = params.output_embeddings[negatives]
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(u_ctx)) and np.all(np.isfinite(u_neg))):
        raise ValueError("non-finite parameter entries")
    pos_scores = np.einsum("bd,bd->b", v, u_ctx)
    neg_scores = np.einsum("bd,bkd->bk", v, u_neg)
    return float(np.logaddexp(0.0, -pos_scores).sum() + np.logaddexp(0.0, neg_scores).sum())


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]. Zero vectors have no direction and raise."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("vectors must share one 1-d shape")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance is undefined for zero vectors")
    return float(np.clip(1.0 - (u @ v) / (nu * nv), 0.0, 2.0))


@dataclass
class NeighborResult:
    """Ranked neighbors of one query word, nearest first."""

    query: str
    neighbors: list[tuple[str, float]]


def nearest_neighbors(
    params: ModelParams, query: str, k: int, vocab: GlobalVocabulary
) -> NeighborResult:
    """Top-k words by cosine distance on the input embeddings.

    The query itself is excluded; distance ties break lexicographically.
    Rows with zero norm have no direction and are skipped as candidates.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if query not in vocab:
        raise ValueError(f"{query!r} is not in the vocabulary")
    qi = vocab.index_of[query]
    matrix = params.input_embeddings
    norms = np.linalg.norm(matrix, axis=1)
    if norms[qi] == 0.0:
        raise ValueError(f"{query!r} has a zero embedding")
    denom = norms * norms[qi]
    safe = np.where(denom == 0.0, 1.0, denom)
    dists = np.clip(1.0 - (matrix @ matrix[qi]) / safe, 0.0, 2.0)
    candidates = [
        (float(dists[i]), vocab.words[i])
        for i in range(len(vocab))
        if i != qi and norms[i] > 0.0
    ]
    candidates.sort()
    return NeighborResult(query, [(w, d) for d, w in candidates[:k]])


def export_embeddings(
    params: ModelParams, vocab: GlobalVocabulary, which: str, path: str | Path
) -> None:
    """Write one matrix as text: a "V d" header line, then one "word v1 .. vd"
    line per word in index order, with full round-trip precision."""
    if which not in ("input", "output"):
        raise ValueError("which must be 'input' or 'output'")
    matrix = params.input_embeddings if which == "input" else params.output_embeddings
    if matrix.shape[0] != len(vocab):
        raise ValueError("matrix row count does not match vocabulary size")
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}"]
    for word, row in zip(vocab.words, matrix):
        lines.append(word + " " + " ".join(repr(float(x)) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def import_embeddings(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Read an embedding file back; strict about the header and row shapes."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError("empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("malformed embedding header")
    try:
        n_rows, dim = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ValueError("malformed embedding header") from exc
    if n_rows < 0 or dim < 1:
        raise ValueError("malformed embedding header")
    body = lines[1:]
    if len(body) != n_rows:
        raise ValueError(f"header promises {n_rows} rows, file has {len(body)}")
    words: list[str] = []
    matrix = np.empty((n_rows, dim))
    for row, line in enumerate(body):
        parts = line.split(" ")
        if len(parts) != dim + 1 or not parts[0]:
            raise ValueError(f"malformed embedding row {row}")
        try:
            matrix[row] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise ValueError(f"non-numeric value in embedding row {row}") from exc
        words.append(parts[0])
    if len(set(words)) != len(words):
        raise ValueError("duplicate word in embedding file")
    return matrix, words
