"""Planner accuracy scoring over Q&A datasets."""

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_EVEN
from typing import List, Optional

from ..backends import ChatBackend
from .planner import (
    PlannerError,
    PlannerParseError,
    PromptTemplates,
    parse_planner_output,
    plan,
)
from .qa import QARecord
from .taxonomy import Taxonomy

_WS = re.compile(r"\s+")


def normalize_category(name: str) -> str:
    """Comparison form: trimmed, internal whitespace collapsed, case-folded."""
    return _WS.sub(" ", name.strip()).casefold()


@dataclass(frozen=True)
class RecordVerdict:
    index: int
    valid: bool
    animal_truth: str = ""
    motion_truth: str = ""
    animal_pred: Optional[str] = None
    motion_pred: Optional[str] = None
    animal_correct: bool = False
    motion_correct: bool = False
    note: str = ""


@dataclass(frozen=True)
class AccuracyReport:
    animal_acc: float
    motion_acc: float
    overall_acc: float
    per_record_verdicts: tuple

    @staticmethod
    def from_verdicts(verdicts: List[RecordVerdict]) -> "AccuracyReport":
        valid = [v for v in verdicts if v.valid]
        if not valid:
            raise PlannerError("no valid records to score")
        animal = _percent(sum(v.animal_correct for v in valid), len(valid))
        motion = _percent(sum(v.motion_correct for v in valid), len(valid))
        return AccuracyReport(
            animal_acc=float(animal),
            motion_acc=float(motion),
            overall_acc=float(combine_overall(animal, motion)),
            per_record_verdicts=tuple(verdicts),
        )


def _percent(correct: int, total: int) -> Decimal:
    return (Decimal(100 * correct) / Decimal(total)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_EVEN
    )


def combine_overall(animal_acc, motion_acc) -> Decimal:
    """Mean of the two accuracies, rounded half-even to two decimals."""
    a = Decimal(str(animal_acc))
    m = Decimal(str(motion_acc))
    return ((a + m) / 2).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


def evaluate_planner(
    dataset: List[QARecord],
    backend: Optional[ChatBackend],
    taxonomy: Taxonomy,
    templates: PromptTemplates = PromptTemplates(),
    max_workers: int = 1,
) -> AccuracyReport:
    """Run the planner over every record and score category extraction.

    Ground truths that do not parse are excluded and flagged; planner
    failures on individual records count as misses, never as crashes.
    Aggregation is order-independent, so records may be planned concurrently.
    """
    if not dataset:
        raise PlannerError("dataset is empty")

    def judge(item) -> RecordVerdict:
        index, record = item
        try:
            truth_animal, truth_motion = parse_planner_output(record.output)
        except PlannerParseError as exc:
            return RecordVerdict(index=index, valid=False, note=f"bad ground truth: {exc}")
        try:
            decision = plan(record.instruction, backend, taxonomy, templates)
            animal_pred, motion_pred = decision.animal, decision.motion
            note = f"source={decision.source}"
        except PlannerError as exc:
            animal_pred, motion_pred = None, None
            note = f"planner error: {exc}"
        return RecordVerdict(
            index=index,
            valid=True,
            animal_truth=truth_animal,
            motion_truth=truth_motion,
            animal_pred=animal_pred,
            motion_pred=motion_pred,
            animal_correct=animal_pred is not None
            and normalize_category(animal_pred) == normalize_category(truth_animal),
            motion_correct=motion_pred is not None
            and normalize_category(motion_pred) == normalize_category(truth_motion),
            note=note,
        )

    items = list(enumerate(dataset))
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            verdicts = list(pool.map(judge, items))
    else:
        verdicts = [judge(item) for item in items]
    verdicts.sort(key=lambda v: v.index)
    return AccuracyReport.from_verdicts(verdicts)
