"""Closed-set animal/motion taxonomy and the deterministic query matcher."""

import json
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

_TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z-]*")


class TaxonomyError(ValueError):
    pass


@dataclass(frozen=True)
class Taxonomy:
    animals: tuple
    motions: tuple
    aliases: Dict[str, str] = field(default_factory=dict)
    body_plans: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for kind, cats in (("animals", self.animals), ("motions", self.motions)):
            if not cats:
                raise TaxonomyError(f"{kind} must be non-empty")
            folded = [c.casefold() for c in cats]
            if len(set(folded)) != len(folded):
                raise TaxonomyError(f"{kind} contain case-folded duplicates")
        known = {c.casefold() for c in self.animals + self.motions}
        for surface, category in self.aliases.items():
            if category.casefold() not in known:
                raise TaxonomyError(
                    f"alias {surface!r} maps to unknown category {category!r}"
                )

    def is_animal(self, name: str) -> bool:
        return name.casefold() in {c.casefold() for c in self.animals}

    def is_motion(self, name: str) -> bool:
        return name.casefold() in {c.casefold() for c in self.motions}

    def canonical_animal(self, name: str) -> Optional[str]:
        for c in self.animals:
            if c.casefold() == name.casefold():
                return c
        return None

    def canonical_motion(self, name: str) -> Optional[str]:
        for c in self.motions:
            if c.casefold() == name.casefold():
                return c
        return None

    def body_plan(self, animal: str) -> str:
        return self.body_plans.get(animal, "quadruped")

    def surface_map(self) -> Dict[str, str]:
        """Case-folded surface form -> canonical category (names + aliases)."""
        table = {}
        for c in self.animals + self.motions:
            table[c.casefold()] = c
        for surface, category in self.aliases.items():
            canon = self.canonical_animal(category) or self.canonical_motion(category)
            table[surface.casefold()] = canon
        return table

    def to_json(self) -> str:
        return json.dumps(
            {
                "animals": list(self.animals),
                "motions": list(self.motions),
                "aliases": dict(self.aliases),
                "body_plans": dict(self.body_plans),
            },
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "Taxonomy":
        raw = json.loads(text)
        return Taxonomy(
            animals=tuple(raw["animals"]),
            motions=tuple(raw["motions"]),
            aliases=dict(raw.get("aliases", {})),
            body_plans=dict(raw.get("body_plans", {})),
        )

    @staticmethod
    def load(path: str) -> "Taxonomy":
        with open(path, "r", encoding="utf-8") as fh:
            return Taxonomy.from_json(fh.read())

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


@dataclass(frozen=True)
class Match:
    category: str
    surface: str
    position: int  # token index of first occurrence


def match_taxonomy(query: str, taxonomy: Taxonomy) -> Tuple[List[Match], List[Match]]:
    """Case-insensitive longest-alias matching over tokens and bigrams.

    Returns ranked (animal_matches, motion_matches). Rank order: longer
    matched surface first, then earlier occurrence, then category name.
    """
    tokens = [(m.group(0).casefold().strip("-"), i) for i, m in enumerate(_TOKEN_RE.finditer(query))]
    table = taxonomy.surface_map()
    found: Dict[str, Match] = {}
    surfaces = [(tok, pos) for tok, pos in tokens]
    surfaces += [
        (f"{tokens[i][0]} {tokens[i + 1][0]}", tokens[i][1]) for i in range(len(tokens) - 1)
    ]
    for surface, pos in surfaces:
        category = table.get(surface)
        if category is None:
            continue
        candidate = Match(category, surface, pos)
        current = found.get(category)
        if current is None or _rank_key(candidate) < _rank_key(current):
            found[category] = candidate
    ranked = sorted(found.values(), key=_rank_key)
    animal_set = {c.casefold() for c in taxonomy.animals}
    animals = [m for m in ranked if m.category.casefold() in animal_set]
    motions = [m for m in ranked if m.category.casefold() not in animal_set]
    return animals, motions


def _rank_key(match: Match):
    return (-len(match.surface), match.position, match.category)


_PLAN_SERPENT = ("Anaconda", "Cobra", "Piranha", "Shark", "Centipede", "Isoptera")
_PLAN_WINGED = (
    "Bat",
    "Bird",
    "Buzzard",
    "Crow",
    "Eagle",
    "Flamingo",
    "Giant Bee",
    "Parrot",
    "Pigeon",
    "Pteranodon",
    "Toucan",
    "Wyvern",
)
_PLAN_BIPED = ("Chicken", "Monkey", "Ostrich", "Raptor", "Tyrannosaurus Rex")

_DEFAULT_ANIMALS = (
    "Anaconda", "Ant", "Bat", "Bear", "Bird", "Buffalo", "Buzzard", "Camel",
    "Cat", "Centipede", "Chicken", "Cobra", "Coyote", "Crab", "Cricket",
    "Crocodile", "Crow", "Deer", "Dog", "Eagle", "Elephant", "Fire Ant",
    "Flamingo", "Fox", "Gazelle", "Giant Bee", "Goat", "Hamster",
    "Hermit Crab", "Hippopotamus", "Horse", "Hound", "Isoptera", "Jaguar",
    "Komodo", "Leopard", "Lion", "Lynx", "Mammoth", "Monkey", "Ostrich",
    "Parrot", "Pigeon", "Piranha", "Polar Bear", "Pteranodon", "Puppy",
    "Rabbit", "Raptor", "Rat", "Reindeer", "Rhino", "Roach",
    "Sabre-toothed Tiger", "Sand Mouse", "Scorpion", "Shark", "Skunk",
    "Spider", "Stegosaurus", "Toucan", "Tricera", "Turtle",
    "Tyrannosaurus Rex", "Wyvern",
)

_DEFAULT_MOTIONS = (
    "Attack", "Climb", "Crawl", "Die", "Drink", "Eat", "Fly", "Hop", "Idle",
    "Jump", "Low Bite", "Roar", "Run", "Sleep", "Swim", "Turn Left",
    "Turn Right", "Walk", "Walk Out", "Walk Quick",
)

_EXTRA_ALIASES = {
    "wolf": "Coyote",
    "wolves": "Coyote",
    "t-rex": "Tyrannosaurus Rex",
    "trex": "Tyrannosaurus Rex",
    "tyrannosaurus": "Tyrannosaurus Rex",
    "sabretooth": "Sabre-toothed Tiger",
    "puppies": "Puppy",
    "hippo": "Hippopotamus",
    "rhinoceros": "Rhino",
    "bite low": "Low Bite",
    "bites low": "Low Bite",
    "hopping": "Hop",
    "leap": "Jump",
    "leaps": "Jump",
    "leaped": "Jump",
    "sprint": "Run",
    "sprints": "Run",
    "sprinting": "Run",
}

_ADVERBS = {"quick": "quickly"}


def _inflect_verb(verb: str) -> List[str]:
    v = verb.casefold()
    forms = [v]
    forms.append(v + "es" if v.endswith(("s", "x", "ch", "sh")) else v + "s")
    if v.endswith("e"):
        forms += [v + "d", v[:-1] + "ing"]
    elif len(v) >= 3 and v[-1] not in "aeiouwy" and v[-2] in "aeiou" and v[-3] not in "aeiou":
        forms += [v + v[-1] + "ed", v + v[-1] + "ing"]
    elif v.endswith("y") and len(v) >= 2 and v[-2] not in "aeiou":
        forms += [v[:-1] + "ied", v + "ing"]
    else:
        forms += [v + "ed", v + "ing"]
    return forms


def _plural(noun: str) -> str:
    n = noun.casefold()
    if n.endswith(("s", "x", "ch", "sh")):
        return n + "es"
    if n.endswith("y") and len(n) >= 2 and n[-2] not in "aeiou":
        return n[:-1] + "ies"
    return n + "s"


def default_taxonomy() -> Taxonomy:
    """The built-in taxonomy: 65 animal categories plus a compact motion set,
    with surface-form aliases for basic plurals and verb inflections."""
    aliases = dict(_EXTRA_ALIASES)
    for animal in _DEFAULT_ANIMALS:
        if " " not in animal and "-" not in animal:
            aliases.setdefault(_plural(animal), animal)
    for motion in _DEFAULT_MOTIONS:
        words = motion.split()
        verb_forms = _inflect_verb(words[0])
        if len(words) == 1:
            for form in verb_forms:
                aliases.setdefault(form, motion)
        else:
            tail = " ".join(_ADVERBS.get(w.casefold(), w.casefold()) for w in words[1:])
            plain_tail = " ".join(w.casefold() for w in words[1:])
            for form in verb_forms:
                aliases.setdefault(f"{form} {tail}", motion)
                if tail != plain_tail:
                    aliases.setdefault(f"{form} {plain_tail}", motion)
    body_plans = {a: "serpent" for a in _PLAN_SERPENT}
    body_plans.update({a: "winged" for a in _PLAN_WINGED})
    body_plans.update({a: "biped" for a in _PLAN_BIPED})
    return Taxonomy(
        animals=_DEFAULT_ANIMALS,
        motions=_DEFAULT_MOTIONS,
        aliases=aliases,
        body_plans=body_plans,
    )
