"""Align video segments to instruction-manual diagrams: contrastive
projection heads, optimal-transport and DTW set matching, retrieval
metrics, and a synthetic data generator."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    DiagramRef,
    EmbeddingTable,
    Manual,
    Segment,
    VideoRecord,
    load_manifest,
    read_embedding_table,
    save_manifest,
    validate_dataset,
    write_embedding_table,
)
from .features import ProjectionHead, augment, progress_rate_diagram, progress_rate_video, project, sprf
from .losses import LossParams, cosine_sim, info_nce, js_divergence, match_probs
from .metrics import RetrievalQuery, auroc, average_index_error, recall_at_k, top1_accuracy
from .model import AlignmentModel
from .optim import AdamW
from .setmatch import cost_matrix, dtw_align, plan_to_assignment, similarity_matrix, sinkhorn
from .synth import SynthConfig, generate

__all__ = [
    "AdamW",
    "AlignmentModel",
    "Dataset",
    "DiagramRef",
    "EmbeddingTable",
    "LossParams",
    "Manual",
    "ProjectionHead",
    "RetrievalQuery",
    "Segment",
    "SynthConfig",
    "VideoRecord",
    "augment",
    "auroc",
    "average_index_error",
    "cosine_sim",
    "cost_matrix",
    "dtw_align",
    "generate",
    "info_nce",
    "js_divergence",
    "load_manifest",
    "match_probs",
    "plan_to_assignment",
    "progress_rate_diagram",
    "progress_rate_video",
    "project",
    "read_embedding_table",
    "recall_at_k",
    "save_manifest",
    "similarity_matrix",
    "sinkhorn",
    "sprf",
    "top1_accuracy",
    "validate_dataset",
    "write_embedding_table",
]
