"""HUGE: heterophily-guided unsupervised graph fraud detection.

Library layout:

- ``huge.graph``: CSR attributed graphs, file IO, batch closures
- ``huge.heterophily``: label-free edge/node heterophily metrics + property suite
- ``huge.encoder``: joint MLP-GNN encoder, scores, checkpoints
- ``huge.losses``: ranking + alignment losses with hand-derived gradients
- ``huge.trainer``: deterministic training loop, inference
- ``huge.metrics``: AUROC/AUPRC, seed aggregation, ablation harness
- ``huge.datagen``: planted-fraud synthetic graphs
- ``huge.kernels``: numba/numpy twin backends for the hot loops
- ``huge.cli``: command line (``huge`` entry point)
"""
__version__ = "0.1.0"

from huge.datagen import SynthSpec, generate
from huge.encoder import (
    EncoderParams,
    final_fraud_scores,
    init_params,
    load_checkpoint,
    mlp_forward,
    save_checkpoint,
)
from huge.graph import AttributedGraph, from_edges, load_graph, save_graph
from huge.heterophily import (
    METRIC_IDS,
    HeterophilyField,
    check_properties,
    halo_edge,
    node_heterophily,
)
from huge.kernels import BACKEND
from huge.losses import LossBreakdown, align_loss, rank_loss_minus, rank_loss_plus
from huge.metrics import ScoreReport, auprc, auroc, evaluate, run_matrix
from huge.numerics import NumericalError
from huge.trainer import TrainConfig, TrainLog, infer, train

__all__ = [
    "__version__",
    "AttributedGraph",
    "BACKEND",
    "EncoderParams",
    "HeterophilyField",
    "LossBreakdown",
    "METRIC_IDS",
    "NumericalError",
    "ScoreReport",
    "SynthSpec",
    "TrainConfig",
    "TrainLog",
    "align_loss",
    "auprc",
    "auroc",
    "check_properties",
    "evaluate",
    "final_fraud_scores",
    "from_edges",
    "generate",
    "halo_edge",
    "init_params",
    "infer",
    "load_checkpoint",
    "load_graph",
    "mlp_forward",
    "node_heterophily",
    "rank_loss_minus",
    "rank_loss_plus",
    "run_matrix",
    "save_checkpoint",
    "save_graph",
    "train",
]
