"""Round-synchronous federated training by gradient averaging, plus the
matching centralized baseline.

Each round every node draws one batch from its private corpus, computes the
batch gradient against the shared parameter snapshot, and sends only the
row-indexed deltas. The coordinator averages the gradients over all nodes
(rows absent from a node count as zero), applies one SGD step, and the
updated parameters stand in for a broadcast. One federated round therefore
consumes nodes * batch_size samples. Raw text and token ids never leave a
node; only gradients do.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import generate_pairs
from .evaluation import HeldoutSet, build_heldout, validation_loss
from .sgns import (
    ModelParams,
    SgnsBatch,
    SparseGradient,
    apply_update,
    batch_loss_grad,
    build_negative_table,
    draw_negatives,
    init_params,
)


@dataclass
class TrainingConfig:
    """Hyperparameters for one training run; defaults are the full-scale ones."""

    nodes: int = 10
    batch_size: int = 2048
    dim: int = 200
    negatives: int = 64
    vocab_cap: int = 200_000
    vocab_threshold: int = 10
    learning_rate: float = 0.025
    window: int = 5
    total_iterations: int = 2_000_000
    validation_interval: int = 100
    seed: int = 42
    negative_power: float = 0.75
    dynamic_window: bool = True
    heldout_fraction: float = 0.01
    log_per_node: bool = False

    def validate(self) -> None:
        for name in (
            "nodes",
            "batch_size",
            "dim",
            "negatives",
            "vocab_cap",
            "vocab_threshold",
            "window",
            "total_iterations",
            "validation_interval",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.negative_power > 0:
            raise ValueError("negative_power must be positive")
        if not 0 < self.heldout_fraction < 1:
            raise ValueError("heldout_fraction must be in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class GradientMessage:
    """The only payload a node ever sends: sparse deltas plus bookkeeping."""

    node_id: int
    round: int
    gradient: SparseGradient
    samples_processed: int


@dataclass
class LossRecord:
    iteration: int
    epoch: int
    node_id: str
    validation_loss: float


@dataclass
class RoundReport:
    round: int
    aggregated_row_count: int
    wall_time: float
    node_samples: dict[int, int] = field(default_factory=dict)


class NodeState:
    """One participant: its pair stream, local noise table, and held-out set.

    Node i draws every random number from a generator derived from
    (seed XOR i), so runs are reproducible and node 0 consumes exactly the
    stream a centralized run would. The noise table comes from the node's own
    counts; local counts are never shared.
    """

    def __init__(self, node_id, stream, table, heldout, rng) -> None:
        self.node_id = node_id
        self.stream = stream
        self.table = table
        self.heldout = heldout
        self.rng = rng

    @property
    def epoch(self) -> int:
        return self.stream.epoch

    @classmethod
    def create(
        cls, node_id: int, dataset: np.ndarray, vocab_size: int, config: TrainingConfig
    ) -> "NodeState":
        data = np.asarray(dataset, dtype=np.int64)
        if data.size == 0:
            raise ValueError(f"node {node_id}: empty dataset")
        if data.size < 2:
            raise ValueError(f"node {node_id}: dataset too short to form pairs")
        if data.min() < 0 or data.max() >= vocab_size:
            raise ValueError(f"node {node_id}: dataset id out of vocabulary range")
        counts = np.bincount(data, minlength=vocab_size)
        table = build_negative_table(counts, config.negative_power)
        train_rng = np.random.default_rng([config.seed ^ node_id, 0])
        heldout_rng = np.random.default_rng([config.seed ^ node_id, 1])
        heldout, reserved = build_heldout(
            data,
            table,
            config.negatives,
            config.window,
            config.heldout_fraction,
            heldout_rng,
            dynamic=config.dynamic_window,
        )
        stream = generate_pairs(
            data,
            config.window,
            rng=train_rng,
            dynamic=config.dynamic_window,
            exclude=reserved,
        )
        return cls(node_id, stream, table, heldout, train_rng)

    def next_batch(self, batch_size: int, num_negatives: int) -> SgnsBatch:
        pairs = self.stream.next_batch(batch_size)
        negatives = draw_negatives(self.table, pairs[:, 1], self.rng, num_negatives)
        return SgnsBatch(pairs, negatives)


def aggregate_gradients(
    grads: Sequence[SparseGradient], n_nodes: int | None = None
) -> SparseGradient:
    """Average sparse gradients exactly as dense averaging would.

    Per row: the sum over nodes (rows a node did not send count as zero)
    divided by the node count, never by how many nodes sent the row. Rows
    that cancel to exactly zero are dropped.
    """
    grads = list(grads)
    if not grads:
        raise ValueError("no gradients to aggregate")
    n = len(grads) if n_nodes is None else n_nodes
    if n != len(grads):
        raise ValueError("node count must match the number of gradients")

    dim: tuple[int, ...] | None = None

    def merge(side: str) -> dict[int, np.ndarray]:
        nonlocal dim
        merged: dict[int, np.ndarray] = {}
        for index in sorted({i for g in grads for i in getattr(g, side)}):
            total = None
            for g in grads:
                row = getattr(g, side).get(index)
                if row is None:
                    continue
                if dim is None:
                    dim = row.shape
                elif row.shape != dim:
                    raise ValueError("mismatched gradient dimensions")
                total = row.astype(np.float64, copy=True) if total is None else total + row
            mean = total / n
            if np.any(mean):
                merged[index] = mean
        return merged

    return SparseGradient(merge("input_rows"), merge("output_rows"))


def federated_round(
    params: ModelParams,
    node_states: Sequence[NodeState],
    config: TrainingConfig,
    round_index: int = 1,
) -> tuple[ModelParams, RoundReport, list[GradientMessage]]:
    """One synchronized round over all nodes.

    Every gradient is computed against the incoming snapshot before any
    update, and aggregation always runs in ascending node-id order, so the
    result does not depend on the order node_states is listed in and a
    failing node aborts the round with params untouched.
    """
    start = time.perf_counter()
    messages = []
    for state in node_states:
        batch = state.next_batch(config.batch_size, config.negatives)
        _, grad = batch_loss_grad(params, batch)
        messages.append(GradientMessage(state.node_id, round_index, grad, batch.size))
    ordered = sorted(messages, key=lambda m: m.node_id)
    aggregate = aggregate_gradients([m.gradient for m in ordered], len(ordered))
    apply_update(params, aggregate, config.learning_rate)
    report = RoundReport(
        round=round_index,
        aggregated_row_count=aggregate.row_count,
        wall_time=time.perf_counter() - start,
        node_samples={m.node_id: m.samples_processed for m in ordered},
    )
    return params, report, messages


def _validation_records(
    iteration: int,
    params: ModelParams,
    states: Sequence[NodeState],
    config: TrainingConfig,
) -> list[LossRecord]:
    per_node = [(state, validation_loss(params, state.heldout)) for state in states]
    total = float(sum(loss for _, loss in per_node))
    min_epoch = min(state.epoch for state, _ in per_node)
    records = [LossRecord(iteration, min_epoch, "global", total)]
    if config.log_per_node:
        records.extend(
            LossRecord(iteration, state.epoch, str(state.node_id), float(loss))
            for state, loss in per_node
        )
    return records


def run_federated(
    datasets: Sequence[np.ndarray],
    vocab,
    config: TrainingConfig,
    report_cb: Callable[[RoundReport], None] | None = None,
) -> tuple[ModelParams, list[LossRecord]]:
    """Train for config.total_iterations rounds over len(datasets) nodes.

    Fully deterministic given config.seed. Every validation_interval rounds a
    "global" LossRecord is emitted: the summed held-out loss over all nodes'
    frozen validation sets, with the epoch column showing the fewest full
    passes any node has completed. Per-node records are added when
    config.log_per_node is set.
    """
    config.validate()
    if len(datasets) != config.nodes:
        raise ValueError(f"expected {config.nodes} datasets, got {len(datasets)}")
    vocab_size = len(vocab)
    states = [
        NodeState.create(i, dataset, vocab_size, config)
        for i, dataset in enumerate(datasets)
    ]
    params = init_params(vocab_size, config.dim, config.seed)
    records: list[LossRecord] = []
    for t in range(1, config.total_iterations + 1):
        _, report, _ = federated_round(params, states, config, t)
        if report_cb is not None:
            report_cb(report)
        if t % config.validation_interval == 0:
            records.extend(_validation_records(t, params, states, config))
    return params, records


def run_centralized(
    dataset: np.ndarray,
    vocab,
    config: TrainingConfig,
    report_cb: Callable[[RoundReport], None] | None = None,
) -> tuple[ModelParams, list[LossRecord]]:
    """Plain sequential SGD baseline: one batch per iteration, no averaging,
    with the same loss definition and logging as the federated loop."""
    config.validate()
    vocab_size = len(vocab)
    state = NodeState.create(0, dataset, vocab_size, config)
    params = init_params(vocab_size, config.dim, config.seed)
    records: list[LossRecord] = []
    for t in range(1, config.total_iterations + 1):
        start = time.perf_counter()
        batch = state.next_batch(config.batch_size, config.negatives)
        _, grad = batch_loss_grad(params, batch)
        apply_update(params, grad, config.learning_rate)
        if report_cb is not None:
            report_cb(
                RoundReport(t, grad.row_count, time.perf_counter() - start, {0: batch.size})
            )
        if t % config.validation_interval == 0:
            records.append(
                LossRecord(t, state.epoch, "global", float(validation_loss(params, state.heldout)))
            )
    return params, records
