from .quality import MetricError, diversity, fid, fid_from_moments, multimodal_dist, r_precision
from .embedding import (
    DESCRIPTOR_DIM,
    EmbeddingError,
    EmbeddingSpace,
    EvalSpaceConfig,
    deterministic_space,
    motion_descriptor,
    train_eval_space,
)
from .report import CategoryMetrics, MetricReport, evaluate_corpus

__all__ = [
    "MetricError",
    "diversity",
    "fid",
    "fid_from_moments",
    "multimodal_dist",
    "r_precision",
    "DESCRIPTOR_DIM",
    "EmbeddingError",
    "EmbeddingSpace",
    "EvalSpaceConfig",
    "deterministic_space",
    "motion_descriptor",
    "train_eval_space",
    "CategoryMetrics",
    "MetricReport",
    "evaluate_corpus",
]
