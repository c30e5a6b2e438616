"""Query planning: extract (animal, motion) from a user query and build the
downstream motion / avatar prompts."""

import re
from dataclasses import dataclass
from typing import Optional, Tuple

from ..backends import BackendError, ChatBackend
from .taxonomy import Taxonomy, match_taxonomy


class PlannerError(ValueError):
    pass


class PlannerParseError(PlannerError):
    """Reply did not follow `The animal is {X}, and motion is {Y}.`"""


SYSTEM_PROMPT = (
    "You identify the animal and the motion described by the user. "
    "Reply with exactly one line of the form: "
    "The animal is {X}, and motion is {Y}."
)

_ANIMAL_RE = re.compile(r"animal is[^{}]*\{([^{}]*)\}")
_MOTION_RE = re.compile(r"motion is[^{}]*\{([^{}]*)\}")


@dataclass(frozen=True)
class PromptTemplates:
    motion: str = "a {animal} performs {motion}"
    avatar: str = "a full-body photo of a {animal}, neutral pose, white background"


@dataclass(frozen=True)
class PlannerDecision:
    animal: str
    motion: str
    motion_prompt: str
    avatar_prompt: str
    source: str  # "llm" or "matcher"
    raw_backend_text: Optional[str] = None

    def __post_init__(self):
        if self.source not in ("llm", "matcher"):
            raise PlannerError(f"unknown decision source {self.source!r}")
        if not self.motion_prompt or not self.avatar_prompt:
            raise PlannerError("prompts must be non-empty")


def format_planner_output(animal: str, motion: str) -> str:
    return f"The animal is {{{animal}}}, and motion is {{{motion}}}."


def parse_planner_output(text: str) -> Tuple[str, str]:
    """Extract (animal, motion) from the reply grammar.

    The first brace-delimited span after "animal is" and the first after
    "motion is" are taken, whitespace-trimmed, case preserved.
    """
    animal = _ANIMAL_RE.search(text)
    motion = _MOTION_RE.search(text)
    if animal is None or motion is None:
        raise PlannerParseError(
            f"could not find both brace-delimited categories in {text!r}"
        )
    return animal.group(1).strip(), motion.group(1).strip()


def build_prompts(animal: str, motion: str, templates: PromptTemplates = PromptTemplates()) -> Tuple[str, str]:
    if not animal or not motion:
        raise PlannerError("animal and motion must be non-empty")
    return (
        templates.motion.format(animal=animal, motion=motion),
        templates.avatar.format(animal=animal, motion=motion),
    )


def _match_decision(query: str, taxonomy: Taxonomy, templates: PromptTemplates,
                    raw_text: Optional[str] = None) -> "PlannerDecision":
    animals, motions = match_taxonomy(query, taxonomy)
    if not animals and not motions:
        raise PlannerError(f"no category recognized in query {query!r}")
    animal = animals[0].category if animals else taxonomy.animals[0]
    if motions:
        motion = motions[0].category
    else:
        motion = taxonomy.canonical_motion("Idle") or sorted(taxonomy.motions)[0]
    qm, qa = build_prompts(animal, motion, templates)
    return PlannerDecision(animal, motion, qm, qa, source="matcher", raw_backend_text=raw_text)


def plan(
    query: str,
    backend: Optional[ChatBackend],
    taxonomy: Taxonomy,
    templates: PromptTemplates = PromptTemplates(),
) -> PlannerDecision:
    """Map a user query to categories and prompts.

    With a backend, the reply is parsed against the planner grammar and both
    categories are validated against the taxonomy; any failure falls back to
    the deterministic matcher. Without a backend the matcher runs directly.
    """
    if not query or not query.strip():
        raise PlannerError("query is empty")
    if backend is not None:
        raw = None
        try:
            raw = backend.complete(
                [
                    {"role": "system", "content": SYSTEM_PROMPT},
                    {"role": "user", "content": query},
                ]
            )
            animal, motion = parse_planner_output(raw)
            if not taxonomy.is_animal(animal) or not taxonomy.is_motion(motion):
                raise PlannerParseError(
                    f"categories ({animal!r}, {motion!r}) outside taxonomy"
                )
            qm, qa = build_prompts(animal, motion, templates)
            return PlannerDecision(animal, motion, qm, qa, source="llm", raw_backend_text=raw)
        except (BackendError, PlannerParseError):
            return _match_decision(query, taxonomy, templates, raw_text=raw)
    return _match_decision(query, taxonomy, templates)
