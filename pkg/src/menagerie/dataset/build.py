"""Desk-scale dataset construction: scan source BVH files, expand variants,
caption them, and park everything in a reviewable working directory."""

import warnings
from pathlib import Path
from typing import Optional, Sequence

from ..backends import BackendError, ChatBackend
from ..motion.bvh import parse_bvh
from ..planner.taxonomy import Taxonomy, match_taxonomy
from .augment import AugmentOp, enumerate_variants
from .caption import caption_motion, refine_caption_checked
from .records import ReviewQueue, TextMotionRecord

DEFAULT_GRID = (
    AugmentOp(kind="mirror"),
    AugmentOp(kind="time_warp", factor=0.5),
    AugmentOp(kind="time_warp", factor=2.0),
    AugmentOp(kind="jitter", sigma=1.5, seed=17),
)

RECORDS_FILE = "records.json"
AUDIT_FILE = "audit.jsonl"


def categories_from_filename(path: Path, taxonomy: Taxonomy):
    """Best-effort (animal, motion) from names like Fox_Walk_Out.bvh."""
    words = path.stem.replace("-", "_").replace("_", " ")
    animals, motions = match_taxonomy(words, taxonomy)
    animal = animals[0].category if animals else words.split()[0].title()
    if motions:
        motion = motions[0].category
    else:
        rest = words.split()[1:]
        motion = " ".join(rest).title() if rest else "Idle"
    return animal, motion


def build_dataset(
    source_dir: str,
    workdir: str,
    taxonomy: Taxonomy,
    grid: Sequence[AugmentOp] = DEFAULT_GRID,
    budget: int = 8,
    caption_backend: Optional[ChatBackend] = None,
    refine_backend: Optional[ChatBackend] = None,
) -> ReviewQueue:
    """Create pending records (source + augmented variants) for every BVH
    file under source_dir and persist them to workdir."""
    src = Path(source_dir)
    files = sorted(src.glob("*.bvh"))
    if not files:
        raise FileNotFoundError(f"no .bvh files under {source_dir}")
    queue = ReviewQueue()
    for path in files:
        _, clip = parse_bvh(path.read_text(encoding="utf-8"))
        animal, motion = categories_from_filename(path, taxonomy)
        variants = [([], clip)]
        variants += enumerate_variants(clip, grid, budget)
        for i, (ops, variant) in enumerate(variants):
            record_id = f"{path.stem}-{i:03d}"
            caption = ""
            refined = True
            try:
                caption = caption_motion(variant, animal, motion, caption_backend)
                caption, refined = refine_caption_checked(caption, refine_backend)
            except BackendError as exc:
                warnings.warn(f"captioning failed for {record_id}: {exc}")
            queue.add(
                TextMotionRecord(
                    id=record_id,
                    animal=animal,
                    motion=motion,
                    caption=caption,
                    num_frames=variant.num_frames,
                    refined=refined,
                    source_path=str(path),
                    lineage_ops=tuple(ops),
                )
            )
    save_queue(queue, workdir)
    return queue


def save_queue(queue: ReviewQueue, workdir: str) -> None:
    wd = Path(workdir)
    wd.mkdir(parents=True, exist_ok=True)
    queue.save(str(wd / RECORDS_FILE), str(wd / AUDIT_FILE))


def load_queue(workdir: str) -> ReviewQueue:
    wd = Path(workdir)
    return ReviewQueue.load(str(wd / RECORDS_FILE), str(wd / AUDIT_FILE))
