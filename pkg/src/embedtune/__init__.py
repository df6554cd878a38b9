"""Confidence-aware semi-supervised tuning over frozen embedding spaces."""

from .datamodel import (
    ClassEmbeddings,
    EmbeddingSet,
    LabelSets,
    ProbMatrix,
    load_class_names,
    load_embeddings,
    load_labels,
    normalize_rows,
    write_class_names,
    write_embeddings,
    write_labels,
)
from .pseudo import (
    AnchorClusters,
    assign_to_anchors,
    cluster_pseudolabels,
    pseudolabel_accuracy,
)
from .sampler import (
    ClusterAlgo,
    ClusterResult,
    FilterStrategy,
    SamplerConfig,
    kmeans,
    kmeans_best,
    quantile_filter,
    random_labelled_set,
    sample_labelled_set,
    select_medoids,
)
from .scoring import (
    Temperature,
    argmax_labels,
    confidence,
    predict_probs,
    softmax_rows,
)
from .semisup import (
    BatchMembership,
    SetKind,
    SslConfig,
    build_confident_set,
    build_weak_set,
    combined_loss,
    cross_entropy,
    partial_label_loss,
    per_class_budget,
)
from .synth import SynthSpec, generate, oracle_nearest
from .trainer import (
    Head,
    SessionMetrics,
    TrainConfig,
    evaluate,
    grad_step,
    head_forward,
    run_sessions,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
