"""EEG connectivity graphs and a from-scratch spatio-temporal GCN for stress classification."""

from .data import (
    Dataset,
    ElectrodeLayout,
    GraphConfig,
    Region,
    Trial,
    default_layout,
    load_dataset,
    load_layout,
    stratified_split,
    zscore_normalize,
)
from .graphs import (
    Adjacency,
    GraphMetrics,
    functional_adjacency,
    fuse_adjacency,
    graph_metrics,
    pearson,
    renormalize,
    structural_adjacency,
    symmetric_eigenvalues,
)
from .models import (
    Metrics,
    ModelConfig,
    TrainConfig,
    auc_roc,
    evaluate,
    train,
)
from .synth import SynthSpec, generate, pink_noise

__version__ = "0.1.0"

__all__ = [
    "Adjacency",
    "Dataset",
    "ElectrodeLayout",
    "GraphConfig",
    "GraphMetrics",
    "Metrics",
    "ModelConfig",
    "Region",
    "SynthSpec",
    "TrainConfig",
    "Trial",
    "auc_roc",
    "default_layout",
    "evaluate",
    "functional_adjacency",
    "fuse_adjacency",
    "generate",
    "graph_metrics",
    "load_dataset",
    "load_layout",
    "pearson",
    "pink_noise",
    "renormalize",
    "stratified_split",
    "structural_adjacency",
    "symmetric_eigenvalues",
    "train",
    "zscore_normalize",
]
