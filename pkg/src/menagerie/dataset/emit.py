"""Emit approved records as feature files plus a JSON-lines manifest."""

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..motion.bvh import parse_bvh
from ..motion.features import FeatureSpec, read_feature_file, to_features, write_feature_file
from ..motion.skeleton import MotionClip
from .augment import apply_sequence
from .records import ReviewQueue, TextMotionRecord


class EmitError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    animal: str
    motion: str
    caption: str
    feature_file: str
    caption_file: str
    frames: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "animal": self.animal,
            "motion": self.motion,
            "caption": self.caption,
            "files": {"features": self.feature_file, "caption": self.caption_file},
            "frames": self.frames,
        }

    @staticmethod
    def from_dict(raw: dict) -> "ManifestEntry":
        return ManifestEntry(
            id=raw["id"],
            animal=raw["animal"],
            motion=raw["motion"],
            caption=raw["caption"],
            feature_file=raw["files"]["features"],
            caption_file=raw["files"]["caption"],
            frames=raw["frames"],
        )


def materialize_clip(record: TextMotionRecord,
                     source_cache: Optional[Dict[str, MotionClip]] = None) -> MotionClip:
    """Replay the record's lineage against its source clip."""
    cache = source_cache if source_cache is not None else {}
    clip = cache.get(record.source_path)
    if clip is None:
        with open(record.source_path, "r", encoding="utf-8") as fh:
            _, clip = parse_bvh(fh.read())
        cache[record.source_path] = clip
    return apply_sequence(clip, record.lineage_ops)


def emit_dataset(queue: ReviewQueue, out_dir: str) -> List[ManifestEntry]:
    """Write approved records under out_dir and return the manifest.

    Each record becomes a MAFM feature file and a caption text file; the
    manifest is one JSON object per line, written atomically.
    """
    approved = queue.by_state("approved")
    if not approved:
        raise EmitError("no approved records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache: Dict[str, MotionClip] = {}
    entries = []
    for record in sorted(approved, key=lambda r: r.id):
        clip = materialize_clip(record, cache)
        features = to_features(clip, FeatureSpec(clip.skeleton, clip.frame_time))
        feature_file = f"{record.id}.mafm"
        caption_file = f"{record.id}.txt"
        write_feature_file(str(out / feature_file), features.data)
        (out / caption_file).write_text(record.caption, encoding="utf-8")
        entries.append(
            ManifestEntry(
                id=record.id,
                animal=record.animal,
                motion=record.motion,
                caption=record.caption,
                feature_file=feature_file,
                caption_file=caption_file,
                frames=clip.num_frames,
            )
        )
    tmp = out / "manifest.jsonl.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict()) + "\n")
    os.replace(tmp, out / "manifest.jsonl")
    return entries


def load_manifest(path: str) -> List[ManifestEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entries.append(ManifestEntry.from_dict(json.loads(line)))
    return entries


def load_entry_features(manifest_path: str, entry: ManifestEntry) -> np.ndarray:
    return read_feature_file(str(Path(manifest_path).parent / entry.feature_file))
