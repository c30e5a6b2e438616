"""Instruction-tuning style Q&A records for planner evaluation.

Dataset files are JSON arrays of objects with keys instruction / input /
output / history; the output follows the planner reply grammar.
"""

import json
from dataclasses import dataclass
from typing import List


class QAFormatError(ValueError):
    pass


@dataclass(frozen=True)
class QARecord:
    instruction: str
    input: str = ""
    output: str = ""
    history: tuple = ()

    @staticmethod
    def from_dict(raw: dict) -> "QARecord":
        try:
            return QARecord(
                instruction=raw["instruction"],
                input=raw.get("input", ""),
                output=raw["output"],
                history=tuple(raw.get("history", [])),
            )
        except KeyError as exc:
            raise QAFormatError(f"record missing key {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "instruction": self.instruction,
            "input": self.input,
            "output": self.output,
            "history": list(self.history),
        }


def load_qa_dataset(path: str) -> List[QARecord]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise QAFormatError("Q&A dataset must be a JSON array")
    return [QARecord.from_dict(item) for item in raw]


def save_qa_dataset(path: str, records: List[QARecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in records], fh, indent=4)
