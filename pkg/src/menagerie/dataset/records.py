"""Text-motion records, the review queue, and its audit log."""

import json
import threading
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

from .augment import AugmentOp

REVIEW_STATES = ("pending", "approved", "rejected")


class ReviewError(ValueError):
    pass


@dataclass(frozen=True)
class TextMotionRecord:
    id: str
    animal: str
    motion: str
    caption: str = ""
    feature_file: str = ""
    num_frames: int = 0
    review_state: str = "pending"
    refined: bool = True
    source_path: str = ""
    lineage_ops: tuple = ()  # AugmentOps applied to the source clip, in order

    def __post_init__(self):
        if self.review_state not in REVIEW_STATES:
            raise ReviewError(f"unknown review state {self.review_state!r}")
        if self.review_state == "approved" and not self.caption:
            raise ReviewError("approved records must carry a caption")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "animal": self.animal,
            "motion": self.motion,
            "caption": self.caption,
            "feature_file": self.feature_file,
            "num_frames": self.num_frames,
            "review_state": self.review_state,
            "refined": self.refined,
            "source_path": self.source_path,
            "lineage_ops": [op.to_dict() for op in self.lineage_ops],
        }

    @staticmethod
    def from_dict(raw: dict) -> "TextMotionRecord":
        raw = dict(raw)
        raw["lineage_ops"] = tuple(AugmentOp.from_dict(o) for o in raw.get("lineage_ops", []))
        return TextMotionRecord(**raw)


@dataclass(frozen=True)
class AuditEntry:
    record_id: str
    verdict: str
    reviewer: str
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "verdict": self.verdict,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }


class ReviewQueue:
    """Holds records by state; state changes are serialized and logged."""

    def __init__(self, records: Optional[List[TextMotionRecord]] = None,
                 clock: Callable[[], float] = time.time):
        self._records: Dict[str, TextMotionRecord] = {}
        self._audit: List[AuditEntry] = []
        self._lock = threading.Lock()
        self._clock = clock
        for r in records or []:
            self.add(r)

    def add(self, record: TextMotionRecord) -> None:
        with self._lock:
            if record.id in self._records:
                raise ReviewError(f"duplicate record id {record.id!r}")
            self._records[record.id] = record

    def get(self, record_id: str) -> TextMotionRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise ReviewError(f"unknown record id {record_id!r}") from None

    def by_state(self, state: str) -> List[TextMotionRecord]:
        if state not in REVIEW_STATES:
            raise ReviewError(f"unknown review state {state!r}")
        return [r for r in self._records.values() if r.review_state == state]

    @property
    def records(self) -> List[TextMotionRecord]:
        return list(self._records.values())

    @property
    def audit_log(self) -> List[AuditEntry]:
        return list(self._audit)

    def save(self, records_path: str, audit_path: str) -> None:
        with self._lock:
            with open(records_path, "w", encoding="utf-8") as fh:
                json.dump([r.to_dict() for r in self._records.values()], fh, indent=2)
            with open(audit_path, "w", encoding="utf-8") as fh:
                for entry in self._audit:
                    fh.write(json.dumps(entry.to_dict()) + "\n")

    @staticmethod
    def load(records_path: str, audit_path: Optional[str] = None,
             clock: Callable[[], float] = time.time) -> "ReviewQueue":
        with open(records_path, "r", encoding="utf-8") as fh:
            records = [TextMotionRecord.from_dict(r) for r in json.load(fh)]
        queue = ReviewQueue(records, clock=clock)
        if audit_path:
            try:
                with open(audit_path, "r", encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            queue._audit.append(AuditEntry(**json.loads(line)))
            except FileNotFoundError:
                pass
        return queue


def review(queue: ReviewQueue, record_id: str, verdict: str, reviewer: str) -> ReviewQueue:
    """Apply a pending -> approved/rejected transition with an audit entry."""
    if verdict not in ("approved", "rejected"):
        raise ReviewError(f"verdict must be approved or rejected, not {verdict!r}")
    with queue._lock:
        record = queue._records.get(record_id)
        if record is None:
            raise ReviewError(f"unknown record id {record_id!r}")
        if record.review_state != "pending":
            raise ReviewError(
                f"record {record_id!r} already reviewed ({record.review_state})"
            )
        queue._records[record_id] = replace(record, review_state=verdict)
        queue._audit.append(
            AuditEntry(record_id=record_id, verdict=verdict, reviewer=reviewer,
                       timestamp=queue._clock())
        )
    return queue
