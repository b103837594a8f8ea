"""TransG: adaptive multi-component translation embeddings for knowledge
graphs — training, link-prediction and classification evaluation, and
semantic-component analysis."""

from .analysis import (
    ClusterAssignment,
    ComponentCensus,
    assign_clusters,
    component_census,
    export_difference_vectors,
    pca_2d,
)
from .checkpoint import (
    CheckpointError,
    load_checkpoint,
    read_manifest,
    save_checkpoint,
    write_manifest,
)
from .datasets import (
    DatasetError,
    LabeledTriple,
    ParseError,
    Triple,
    TripleStore,
    Vocab,
    compute_bern_stats,
    corrupt,
    load_dataset,
    relation_category,
)
from .evaluation import (
    ClassificationThresholds,
    EvalReport,
    classify,
    link_prediction_eval,
    rank_triple,
    tune_thresholds,
)
from .model import (
    TransGModel,
    energy,
    init_model,
    log_score,
    maybe_spawn,
    primary_component,
    responsibilities,
    score,
    spawn_probability,
)
from .presets import PRESETS, preset_config
from .synthetic import SyntheticTruth, label_agreement, two_semantics_store
from .training import (
    DivergenceError,
    EpochStats,
    TrainConfig,
    TrainReport,
    pair_gradients,
    pair_loss,
    sgd_step,
    train,
    update_gate,
)

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ClassificationThresholds",
    "ClusterAssignment",
    "ComponentCensus",
    "DatasetError",
    "DivergenceError",
    "EpochStats",
    "EvalReport",
    "LabeledTriple",
    "PRESETS",
    "ParseError",
    "SyntheticTruth",
    "TrainConfig",
    "TrainReport",
    "TransGModel",
    "Triple",
    "TripleStore",
    "Vocab",
    "assign_clusters",
    "classify",
    "component_census",
    "compute_bern_stats",
    "corrupt",
    "energy",
    "export_difference_vectors",
    "init_model",
    "label_agreement",
    "link_prediction_eval",
    "load_checkpoint",
    "load_dataset",
    "log_score",
    "maybe_spawn",
    "pair_gradients",
    "pair_loss",
    "pca_2d",
    "preset_config",
    "primary_component",
    "rank_triple",
    "read_manifest",
    "relation_category",
    "responsibilities",
    "save_checkpoint",
    "score",
    "sgd_step",
    "spawn_probability",
    "train",
    "tune_thresholds",
    "two_semantics_store",
    "update_gate",
    "write_manifest",
]
