"""Shared test utilities: synthetic corpora and brute-force oracles."""

import numpy as np

from fedvec.sgns import batch_loss_grad


def two_topic_corpus(n_nodes=10, tokens_per_node=10_000, words_per_topic=50,
                     shared_words=8, seed=0):
    """Two planted co-occurrence communities split across the nodes.

    Nodes in the first half draw sentences from the alpha* word family, the
    rest from beta*; a few shared filler words appear everywhere. Returns
    (texts, communities) where texts[i] is node i's corpus and communities
    maps each topic-exclusive word to 0 or 1.
    """
    rng = np.random.default_rng(seed)
    topics = [
        [f"alpha{i:02d}" for i in range(words_per_topic)],
        [f"beta{i:02d}" for i in range(words_per_topic)],
    ]
    shared = [f"filler{i:02d}" for i in range(shared_words)]
    weights = 1.0 / np.power(np.arange(1, words_per_topic + 1), 0.7)
    weights /= weights.sum()
    texts = []
    for node in range(n_nodes):
        topic = topics[0] if node < n_nodes // 2 else topics[1]
        lines = []
        count = 0
        while count < tokens_per_node:
            length = int(rng.integers(8, 20))
            picks = rng.choice(words_per_topic, size=length, p=weights)
            words = [topic[i] for i in picks]
            for pos in range(length):
                if shared and rng.random() < 0.12:
                    words[pos] = shared[int(rng.integers(len(shared)))]
            lines.append(" ".join(words))
            count += length
        texts.append("\n".join(lines) + "\n")
    communities = {w: 0 for w in topics[0]} | {w: 1 for w in topics[1]}
    return texts, communities


def fd_gradient(params, batch, side, idx, step=1e-6):
    """Central finite differences of the batch loss for one parameter row."""
    matrix = params.input_embeddings if side == "input" else params.output_embeddings
    grad = np.zeros(params.dim)
    for j in range(params.dim):
        orig = matrix[idx, j]
        matrix[idx, j] = orig + step
        loss_plus, _ = batch_loss_grad(params, batch)
        matrix[idx, j] = orig - step
        loss_minus, _ = batch_loss_grad(params, batch)
        matrix[idx, j] = orig
        grad[j] = (loss_plus - loss_minus) / (2.0 * step)
    return grad


def max_fd_relative_error(params, batch, grad, step=1e-6):
    """Worst relative error of the analytic gradient against central
    finite differences, over every stored row of both matrices."""
    worst = 0.0
    for side, rows in (("input", grad.input_rows), ("output", grad.output_rows)):
        for idx, analytic in rows.items():
            numeric = fd_gradient(params, batch, side, idx, step)
            denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
            worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
    return worst


def densify(grad, vocab_size, dim):
    """Sparse gradient to a pair of dense (V, d) arrays; absent rows are zero."""
    dense_in = np.zeros((vocab_size, dim))
    dense_out = np.zeros((vocab_size, dim))
    for idx, row in grad.input_rows.items():
        dense_in[idx] = row
    for idx, row in grad.output_rows.items():
        dense_out[idx] = row
    return dense_in, dense_out


def random_sparse_gradient(rng, vocab_size, dim, max_rows=6):
    """Random sparse gradient with non-zero rows only."""
    from fedvec.sgns import SparseGradient

    def side():
        n = int(rng.integers(0, max_rows + 1))
        idx = rng.choice(vocab_size, size=min(n, vocab_size), replace=False)
        rows = {}
        for i in idx:
            row = rng.normal(size=dim)
            while not np.any(row):
                row = rng.normal(size=dim)
            rows[int(i)] = row
        return rows

    return SparseGradient(side(), side())
