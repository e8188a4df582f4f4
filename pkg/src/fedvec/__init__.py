"""Federated skip-gram word embeddings with private vocabulary agreement."""

from .corpus import (
    TokenStream,
    TrainingPair,
    WordCounts,
    count_words,
    encode,
    generate_pairs,
    read_corpus,
    tokenize,
)
from .evaluation import (
    HeldoutSet,
    NeighborResult,
    cosine_distance,
    export_embeddings,
    import_embeddings,
    nearest_neighbors,
    validation_loss,
)
from .fed import (
    GradientMessage,
    LossRecord,
    NodeState,
    RoundReport,
    TrainingConfig,
    aggregate_gradients,
    federated_round,
    run_centralized,
    run_federated,
)
from .sgns import (
    ModelParams,
    NegativeTable,
    SgnsBatch,
    SparseGradient,
    apply_update,
    batch_loss_grad,
    build_negative_table,
    init_params,
)
from .vocab import (
    GlobalVocabulary,
    VocabProposal,
    build_proposal,
    load_vocabulary,
    merge_proposals,
    save_vocabulary,
)

__version__ = "0.1.0"
