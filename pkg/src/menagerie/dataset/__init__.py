from .augment import (
    AugmentError,
    AugmentOp,
    apply_sequence,
    augment,
    enumerate_variants,
    mirror_pairs,
)
from .caption import caption_motion, motion_statistics, refine_caption, refine_caption_checked
from .records import AuditEntry, ReviewError, ReviewQueue, TextMotionRecord, review
from .emit import (
    EmitError,
    ManifestEntry,
    emit_dataset,
    load_entry_features,
    load_manifest,
    materialize_clip,
)
from .build import DEFAULT_GRID, build_dataset, categories_from_filename, load_queue, save_queue

__all__ = [
    "AugmentError",
    "AugmentOp",
    "apply_sequence",
    "augment",
    "enumerate_variants",
    "mirror_pairs",
    "caption_motion",
    "motion_statistics",
    "refine_caption",
    "refine_caption_checked",
    "AuditEntry",
    "ReviewError",
    "ReviewQueue",
    "TextMotionRecord",
    "review",
    "EmitError",
    "ManifestEntry",
    "emit_dataset",
    "load_entry_features",
    "load_manifest",
    "materialize_clip",
    "DEFAULT_GRID",
    "build_dataset",
    "categories_from_filename",
    "load_queue",
    "save_queue",
]
