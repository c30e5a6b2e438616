from .taxonomy import Match, Taxonomy, TaxonomyError, default_taxonomy, match_taxonomy
from .planner import (
    PlannerDecision,
    PlannerError,
    PlannerParseError,
    PromptTemplates,
    build_prompts,
    format_planner_output,
    parse_planner_output,
    plan,
)
from .qa import QAFormatError, QARecord, load_qa_dataset, save_qa_dataset
from .evaluate import (
    AccuracyReport,
    RecordVerdict,
    combine_overall,
    evaluate_planner,
    normalize_category,
)

__all__ = [
    "Match",
    "Taxonomy",
    "TaxonomyError",
    "default_taxonomy",
    "match_taxonomy",
    "PlannerDecision",
    "PlannerError",
    "PlannerParseError",
    "PromptTemplates",
    "build_prompts",
    "format_planner_output",
    "parse_planner_output",
    "plan",
    "QAFormatError",
    "QARecord",
    "load_qa_dataset",
    "save_qa_dataset",
    "AccuracyReport",
    "RecordVerdict",
    "combine_overall",
    "evaluate_planner",
    "normalize_category",
]
