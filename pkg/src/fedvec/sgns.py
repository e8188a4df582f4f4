"""Skip-gram negative sampling core.

For a batch of (center, context) pairs with K noise words per pair the loss is

    sum over pairs [ -log sigma(u_ctx . v_c) - sum_k log sigma(-u_k . v_c) ]

where v rows come from the input matrix and u rows from the output matrix.
The batch loss is summed, not averaged. Gradients touch only the rows a batch
names and travel as row-indexed deltas, which is all that ever crosses the
node/coordinator boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ModelParams:
    """Input and output embedding matrices, both (V, d) float64."""

    input_embeddings: np.ndarray
    output_embeddings: np.ndarray

    def __post_init__(self) -> None:
        a, b = self.input_embeddings, self.output_embeddings
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError("embedding matrices must share one (V, d) shape")

    @property
    def vocab_size(self) -> int:
        return self.input_embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.input_embeddings.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.input_embeddings.copy(), self.output_embeddings.copy())


def init_params(vocab_size: int, dim: int, seed: int) -> ModelParams:
    """Seeded uniform [-0.5/d, 0.5/d] input rows; all-zero output rows."""
    if vocab_size < 1 or dim < 1:
        raise ValueError("vocab_size and dim must be >= 1")
    rng = np.random.default_rng(seed)
    bound = 0.5 / dim
    inputs = rng.uniform(-bound, bound, size=(vocab_size, dim))
    return ModelParams(inputs, np.zeros((vocab_size, dim)))


@dataclass
class NegativeTable:
    """Noise distribution over vocabulary ids with P(i) proportional to
    count_i ** power, stored as a cumulative distribution."""

    cumulative: np.ndarray
    power: float = 0.75

    @property
    def probabilities(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0.0)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw vocabulary ids with replacement."""
        u = rng.random(size)
        return np.searchsorted(self.cumulative, u, side="right").astype(np.int64)


def build_negative_table(counts: np.ndarray, power: float = 0.75) -> NegativeTable:
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size == 0:
        raise ValueError("counts must be a non-empty 1-d array")
    if np.any(counts < 0) or not np.all(np.isfinite(counts)):
        raise ValueError("counts must be finite and non-negative")
    weights = np.power(counts, power)
    total = weights.sum()
    if not total > 0:
        raise ValueError("at least one count must be positive")
    cumulative = np.cumsum(weights / total)
    cumulative[-1] = 1.0
    return NegativeTable(cumulative, power)


def draw_negatives(
    table: NegativeTable, contexts: np.ndarray, rng: np.random.Generator, k: int
) -> np.ndarray:
    """(B, k) noise ids for a batch of true contexts.

    A draw that collides with its own true context is redrawn once and kept
    if it collides again.
    """
    if k < 1:
        raise ValueError("need at least one negative per pair")
    negatives = table.sample(rng, (contexts.size, k))
    clash = negatives == contexts[:, None]
    n_clash = int(clash.sum())
    if n_clash:
        negatives[clash] = table.sample(rng, n_clash)
    return negatives


@dataclass
class SgnsBatch:
    """pairs: (B, 2) center/context ids; negatives: (B, K) noise ids."""

    pairs: np.ndarray
    negatives: np.ndarray

    def __post_init__(self) -> None:
        if self.pairs.ndim != 2 or self.pairs.shape[1] != 2:
            raise ValueError("pairs must have shape (B, 2)")
        if self.negatives.ndim != 2 or self.negatives.shape[0] != self.pairs.shape[0]:
            raise ValueError("negatives must have shape (B, K) aligned with pairs")
        if self.pairs.shape[0] < 1:
            raise ValueError("batch must be non-empty")

    @property
    def size(self) -> int:
        return self.pairs.shape[0]

    @property
    def num_negatives(self) -> int:
        return self.negatives.shape[1]


@dataclass
class SparseGradient:
    """Row-indexed deltas for both matrices; only rows the batch touched,
    never an all-zero row."""

    input_rows: dict[int, np.ndarray]
    output_rows: dict[int, np.ndarray]

    @property
    def row_count(self) -> int:
        return len(self.input_rows) + len(self.output_rows)

    def is_empty(self) -> bool:
        return not self.input_rows and not self.output_rows


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Branch form keeps exp() off large positive arguments.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_indices(name: str, arr: np.ndarray, vocab_size: int) -> None:
    if arr.size and (arr.min() < 0 or arr.max() >= vocab_size):
        raise ValueError(f"{name} id out of range for vocabulary of {vocab_size}")


def _gather(matrix: np.ndarray, idx: np.ndarray, what: str) -> np.ndarray:
    rows = matrix[idx]
    if not np.all(np.isfinite(rows)):
        raise ValueError(f"non-finite entries in {what}")
    return rows


def _scatter(indices: np.ndarray, deltas: np.ndarray) -> dict[int, np.ndarray]:
    uniq, inverse = np.unique(indices, return_inverse=True)
    acc = np.zeros((uniq.size, deltas.shape[1]))
    np.add.at(acc, inverse, deltas)
    return {int(i): acc[n] for n, i in enumerate(uniq) if np.any(acc[n])}


def batch_loss_grad(params: ModelParams, batch: SgnsBatch) -> tuple[float, SparseGradient]:
    """Summed batch loss and its exact gradient over the touched rows.

    Pure in params: nothing is mutated. Raises on out-of-range ids or
    non-finite parameter rows.
    """
    vocab_size = params.vocab_size
    centers = batch.pairs[:, 0]
    contexts = batch.pairs[:, 1]
    negatives = batch.negatives
    _check_indices("center", centers, vocab_size)
    _check_indices("context", contexts, vocab_size)
    _check_indices("negative", negatives, vocab_size)

    v = _gather(params.input_embeddings, centers, "input embeddings")
    u_ctx = _gather(params.output_embeddings, contexts, "output embeddings")
    u_neg = _gather(params.output_embeddings, negatives, "output embeddings")

    pos_scores = np.einsum("bd,bd->b", v, u_ctx)
    neg_scores = np.einsum("bd,bkd->bk", v, u_neg)
    loss = float(
        np.logaddexp(0.0, -pos_scores).sum() + np.logaddexp(0.0, neg_scores).sum()
    )

    g_pos = _sigmoid(pos_scores) - 1.0  # d loss / d pos_score
    g_neg = _sigmoid(neg_scores)  # d loss / d neg_score
    d_center = g_pos[:, None] * u_ctx + np.einsum("bk,bkd->bd", g_neg, u_neg)
    d_ctx = g_pos[:, None] * v
    d_neg = g_neg[:, :, None] * v[:, None, :]

    out_idx = np.concatenate([contexts, negatives.reshape(-1)])
    out_delta = np.concatenate([d_ctx, d_neg.reshape(-1, params.dim)])
    return loss, SparseGradient(_scatter(centers, d_center), _scatter(out_idx, out_delta))


def apply_update(params: ModelParams, grad: SparseGradient, lr: float) -> ModelParams:
    """SGD step: row -= lr * delta for every stored row.

    Mutates params in place and returns it; rows the gradient does not name
    stay bitwise untouched. All rows are validated before any is applied, so
    a bad gradient leaves params unchanged.
    """
    if not lr > 0:
        raise ValueError("learning rate must be positive")
    vocab_size, dim = params.input_embeddings.shape
    for rows in (grad.input_rows, grad.output_rows):
        for idx, delta in rows.items():
            if not 0 <= idx < vocab_size:
                raise ValueError(f"gradient row {idx} out of range")
            if delta.shape != (dim,):
                raise ValueError("gradient row has wrong dimension")
            if not np.all(np.isfinite(delta)):
                raise ValueError("non-finite gradient row")
    for idx, delta in grad.input_rows.items():
        params.input_embeddings[idx] -= lr * delta
    for idx, delta in grad.output_rows.items():
        params.output_embeddings[idx] -= lr * delta
    return params
