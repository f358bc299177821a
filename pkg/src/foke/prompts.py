"""Slotted prompt templates and their instantiation.

A template has three texts (goal, explanation, feedback) sharing one set of
typed slots written as ``[SlotName]``; literal brackets are escaped by
doubling (``[[`` and ``]]``). Instantiation is literal substitution, and
template choice is enumeration over a candidate list against a pluggable
reward function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import NotFoundError, SlotError, ValidationError
from .forest import HIERARCHY, RELATED, Concept, KnowledgeForest, Relation

SLOT_KINDS = ("concept", "concept-list", "problem-type", "user-attribute", "free-text")
SLOT_NAME = re.compile(r"^[A-Za-z0-9_]+$")

DEFAULT_LENGTH_BUDGET = 2000


def scan_template_text(text: str) -> list[tuple[str, str]]:
    """Tokenize to (kind, payload) pairs, kind in {"text", "slot"}.

    Raises on unterminated or malformed slot markers and on unescaped
    closing brackets, so templates fail at load time, not render time.
    """
    tokens: list[tuple[str, str]] = []
    literal: list[str] = []
    i = 0
    while i < len(text):
        two = text[i:i + 2]
        if two == "[[":
            literal.append("[")
            i += 2
        elif two == "]]":
            literal.append("]")
            i += 2
        elif text[i] == "[":
            end = text.find("]", i + 1)
            if end == -1:
                raise ValidationError(f"unterminated slot marker at offset {i}: {text[i:i+20]!r}")
            name = text[i + 1:end]
            if not SLOT_NAME.match(name):
                raise ValidationError(f"invalid slot name {name!r} at offset {i}")
            if literal:
                tokens.append(("text", "".join(literal)))
                literal = []
            tokens.append(("slot", name))
            i = end + 1
        elif text[i] == "]":
            raise ValidationError(
                f"unescaped ']' at offset {i}; write ']]' for a literal bracket")
        else:
            literal.append(text[i])
            i += 1
    if literal:
        tokens.append(("text", "".join(literal)))
    return tokens


def find_slots(text: str) -> list[str]:
    return [payload for kind, payload in scan_template_text(text) if kind == "slot"]


@dataclass
class PromptTemplate:
    """Goal/explanation/feedback texts plus the declared slots they may use."""

    template_id: str
    goal: str
    explanation: str
    feedback: str
    slots: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.template_id:
            raise ValidationError("template_id must be nonempty")
        for name, kind in self.slots.items():
            if not SLOT_NAME.match(name):
                raise ValidationError(f"invalid declared slot name {name!r}")
            if kind not in SLOT_KINDS:
                raise ValidationError(
                    f"slot {name!r} has unknown kind {kind!r}; expected one of {SLOT_KINDS}")
        for text in (self.goal, self.explanation, self.feedback):
            for used in find_slots(text):
                if used not in self.slots:
                    raise SlotError(
                        f"template {self.template_id!r} uses undeclared slot {used!r}",
                        slot=used, template_id=self.template_id)


@dataclass
class PromptText:
    """Fully rendered prompt; provenance records where each value came from."""

    goal: str
    explanation: str
    feedback: str
    slot_values: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def total_length(self) -> int:
        return len(self.goal) + len(self.explanation) + len(self.feedback)


RewardFn = Callable[[PromptText], float]


def join_concept_list(items: Sequence[str]) -> str:
    """", "-separated with a final " and ": [a, b, c] -> "a, b and c"."""
    items = list(items)
    if not items:
        return ""
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _render_value(name: str, kind: str, value, template_id: str) -> str:
    if kind == "concept-list":
        if (not isinstance(value, (list, tuple))
                or any(not isinstance(v, str) for v in value)):
            raise SlotError(
                f"slot {name!r} expects a list of strings, got {value!r}",
                slot=name, template_id=template_id)
        return join_concept_list(value)
    if not isinstance(value, str):
        raise SlotError(
            f"slot {name!r} ({kind}) expects a string, got {value!r}",
            slot=name, template_id=template_id)
    return value


def instantiate(template: PromptTemplate, slot_values: Mapping[str, object],
                provenance: Mapping[str, str] | None = None) -> PromptText:
    """Literal substitution of slot values into all three texts.

    ``slot_values`` must cover exactly the declared slots; concept-list
    values are joined with ", " and a final " and ".
    """
    for name in template.slots:
        if name not in slot_values:
            raise SlotError(f"missing value for slot {name!r}",
                            slot=name, template_id=template.template_id)
    for name in slot_values:
        if name not in template.slots:
            raise SlotError(f"value supplied for undeclared slot {name!r}",
                            slot=name, template_id=template.template_id)
    rendered = {
        name: _render_value(name, kind, slot_values[name], template.template_id)
        for name, kind in template.slots.items()
    }

    def render(text: str) -> str:
        parts = []
        for kind, payload in scan_template_text(text):
            parts.append(payload if kind == "text" else rendered[payload])
        return "".join(parts)

    sources = {name: "provided" for name in template.slots}
    if provenance:
        sources.update({k: v for k, v in provenance.items() if k in sources})
    return PromptText(render(template.goal), render(template.explanation),
                      render(template.feedback), rendered, sources)


def default_reward(text: PromptText, length_budget: int = DEFAULT_LENGTH_BUDGET) -> float:
    """Slot-coverage fraction minus a length-overrun penalty, in [-1, 1].

    Coverage is the fraction of slots with a nonempty rendered value (a
    slotless prompt counts as covered iff it has any text at all); the
    penalty grows linearly past the length budget and caps at 1.
    """
    if text.slot_values:
        covered = sum(1 for v in text.slot_values.values() if v)
        coverage = covered / len(text.slot_values)
    else:
        coverage = 1.0 if text.total_length > 0 else 0.0
    overrun = max(0, text.total_length - length_budget)
    penalty = min(1.0, overrun / length_budget)
    return coverage - penalty


def score_prompt(text: PromptText, reward: RewardFn | None = None) -> float:
    return float((reward or default_reward)(text))


def select_best_template(candidates: Sequence[PromptTemplate],
                         slot_values: Mapping[str, object],
                         reward: RewardFn | None = None,
                         provenance: Mapping[str, str] | None = None,
                         ) -> tuple[str, PromptText]:
    """Instantiate every candidate with the same values and keep the highest
    scorer; ties go to the earliest candidate."""
    if not candidates:
        raise ValidationError("candidate template list must be nonempty")
    best: tuple[str, PromptText] | None = None
    best_score = -float("inf")
    for template in candidates:
        text = instantiate(template, slot_values, provenance)
        score = score_prompt(text, reward)
        if best is None or score > best_score:
            best = (template.template_id, text)
            best_score = score
    return best


# --- task sub-forest ---------------------------------------------------------

@dataclass
class TaskSpec:
    """What a prompt is about: focus concepts, a problem type, and how far
    around the focus to look."""

    task_id: str
    focus_concepts: list[str]
    problem_type: str = ""
    hop_radius: int = 0

    def __post_init__(self):
        if not self.focus_concepts:
            raise ValidationError(f"task {self.task_id!r} needs at least one focus concept")
        if self.hop_radius < 0:
            raise ValidationError(f"hop_radius must be >= 0, got {self.hop_radius}")


@dataclass
class SubTree:
    tree_id: str
    concepts: list[Concept]
    relations: list[Relation]

    def concept_ids(self) -> set[str]:
        return {c.id for c in self.concepts}


@dataclass
class SubForest:
    """The slice of the forest a task touches: per-tree concept subsets plus
    the relations induced on them."""

    entries: list[SubTree]

    def concept_ids(self) -> set[str]:
        return {cid for entry in self.entries for cid in entry.concept_ids()}

    def concepts(self) -> list[Concept]:
        return [c for entry in self.entries for c in entry.concepts]


def retrieve_task_subforest(forest: KnowledgeForest, task: TaskSpec) -> SubForest:
    """Concepts within ``hop_radius`` hierarchy/related hops of any focus
    concept, restricted to the trees containing the foci, with induced
    relations of every kind."""
    for cid in task.focus_concepts:
        forest.find_concept(cid)
    entries: list[SubTree] = []
    for tree in forest.trees:
        seeds = [cid for cid in task.focus_concepts if cid in tree.concepts]
        if not seeds:
            continue
        reached = set(seeds)
        frontier = set(seeds)
        for _ in range(task.hop_radius):
            frontier = {
                neighbor
                for cid in frontier
                for neighbor in tree.neighbors(cid, kinds=(HIERARCHY, RELATED))
                if neighbor not in reached
            }
            if not frontier:
                break
            reached |= frontier
        concepts = [c for cid, c in tree.concepts.items() if cid in reached]
        relations = [r for r in tree.sorted_relations()
                     if r.source in reached and r.target in reached]
        entries.append(SubTree(tree.tree_id, concepts, relations))
    return SubForest(entries)


# --- slot derivation glue ----------------------------------------------------

def derive_slot_values(template: PromptTemplate, task: TaskSpec,
                       subforest: SubForest, forest: KnowledgeForest,
                       user_attributes: Mapping[str, str] | None = None,
                       overrides: Mapping[str, object] | None = None,
                       ) -> tuple[dict[str, object], dict[str, str]]:
    """Fill a template's declared slots from the task, the retrieved
    sub-forest, and the learner's attributes.

    concept -> name of the first focus concept; concept-list -> names of the
    other retrieved concepts (alphabetical); problem-type -> the task's;
    user-attribute -> attribute matching the lowercased slot name; free-text
    must be supplied via ``overrides``.
    """
    overrides = dict(overrides or {})
    user_attributes = user_attributes or {}
    values: dict[str, object] = {}
    provenance: dict[str, str] = {}
    focus_set = set(task.focus_concepts)
    for name, kind in template.slots.items():
        if name in overrides:
            values[name] = overrides[name]
            provenance[name] = "override"
            continue
        if kind == "concept":
            _, concept = forest.find_concept(task.focus_concepts[0])
            values[name] = concept.name
            provenance[name] = "task.focus_concepts"
        elif kind == "concept-list":
            names = sorted(c.name for c in subforest.concepts() if c.id not in focus_set)
            values[name] = names
            provenance[name] = "forest.neighborhood"
        elif kind == "problem-type":
            values[name] = task.problem_type
            provenance[name] = "task.problem_type"
        elif kind == "user-attribute":
            key = name.lower()
            if key not in user_attributes:
                raise SlotError(
                    f"no user attribute {key!r} to fill slot {name!r}",
                    slot=name, template_id=template.template_id)
            values[name] = user_attributes[key]
            provenance[name] = "user.attributes"
        else:  # free-text
            raise SlotError(
                f"free-text slot {name!r} needs an explicit value",
                slot=name, template_id=template.template_id)
    return values, provenance


def choose_prompt(forest: KnowledgeForest, task: TaskSpec,
                  templates: Sequence[PromptTemplate],
                  user_attributes: Mapping[str, str] | None = None,
                  overrides: Mapping[str, object] | None = None,
                  reward: RewardFn | None = None,
                  ) -> tuple[str, PromptText, float]:
    """End-to-end prompt build: retrieve the task sub-forest, derive values
    per candidate, instantiate all, return the best (template_id, text,
    score) with ties to the earliest candidate."""
    if not templates:
        raise ValidationError("candidate template list must be nonempty")
    subforest = retrieve_task_subforest(forest, task)
    best: tuple[str, PromptText, float] | None = None
    for template in templates:
        values, provenance = derive_slot_values(
            template, task, subforest, forest, user_attributes, overrides)
        text = instantiate(template, values, provenance)
        score = score_prompt(text, reward)
        if best is None or score > best[2]:
            best = (template.template_id, text, score)
    return best
