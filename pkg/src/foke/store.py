"""Deterministic file formats: forest documents, template and profile
collections, and engine snapshots.

Everything serializes through one canonical JSON form (sorted keys, two-space
indent, UTF-8, shortest round-trip floats, trailing newline) so that equal
values always produce identical bytes and content digests are stable.
Snapshots append a sha256 trailer line over the JSON body and are written
atomically (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .embedding import EmbeddingTable, TrainConfig
from .errors import (
    DuplicateIdError,
    FokeError,
    SnapshotCorruptError,
    ValidationError,
)
from .forest import (
    HIERARCHY,
    PREREQUISITE,
    RELATED,
    RELATION_KINDS,
    Concept,
    KnowledgeForest,
    KnowledgeTree,
    Relation,
)
from .prompts import SLOT_KINDS, PromptTemplate
from .training import Triple

FOREST_FORMAT_VERSION = 1
TEMPLATES_FORMAT_VERSION = 1
PROFILES_FORMAT_VERSION = 1
SNAPSHOT_FORMAT_VERSION = 1

_DIGEST_PREFIX = "sha256:"


# ---------------------------------------------------------------------------
# canonical JSON


def canonical_json_bytes(value: Any) -> bytes:
    """Canonical UTF-8 JSON: sorted keys, indent 2, trailing newline.

    Floats use Python's shortest round-trip repr, so load(dump(x)) is
    bit-exact and equal values yield identical bytes.
    """
    text = json.dumps(value, sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False)
    return (text + "\n").encode("utf-8")


def _reject_constant(name: str) -> float:
    raise ValidationError(f"non-finite number {name!r} is not allowed")


def parse_json_bytes(data: bytes, source: str = "document") -> Any:
    """Strict JSON parse: UTF-8 only, NaN/Infinity rejected."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{source} is not valid UTF-8: {exc}") from exc
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{source} is not valid JSON at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from exc


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_bytes_atomic(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never observe a
    partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


# ---------------------------------------------------------------------------
# schema-walking helpers; every message names the offending field path


def expect_scalar(value: Any, kind: type, kind_name: str, path: str) -> Any:
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{path} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ValidationError(f"{path} must be {kind_name}, got {value!r}")
    return value


def expect_object(value: Any, path: str) -> dict:
    return expect_scalar(value, dict, "an object", path)


def expect_array(value: Any, path: str) -> list:
    return expect_scalar(value, list, "an array", path)


def expect_string(value: Any, path: str) -> str:
    text = expect_scalar(value, str, "a string", path)
    if not text:
        raise ValidationError(f"{path} must be a non-empty string")
    return text


def expect_number(value: Any, path: str) -> float:
    return expect_scalar(value, float, "a number", path)


def expect_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path} must be an integer, got {value!r}")
    return value


def get_field(obj: Mapping[str, Any], key: str, path: str, required: bool = True,
              default: Any = None) -> Any:
    if key not in obj:
        if required:
            raise ValidationError(f"{path}.{key} is required")
        return default
    return obj[key]


def no_extra_keys(obj: Mapping[str, Any], allowed: set[str], path: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ValidationError(f"{path} has unknown field(s) {', '.join(extra)}")


def check_version(obj: Mapping[str, Any], expected: int, path: str) -> None:
    version = get_field(obj, "format_version", path)
    if version != expected:
        raise ValidationError(
            f"{path}.format_version must be {expected}, got {version!r}")


# ---------------------------------------------------------------------------
# forest documents


@dataclass(frozen=True)
class ForestDocument:
    """A parsed forest file: the forest plus its training triple set."""

    forest: KnowledgeForest
    triples: tuple[Triple, ...] = ()
    format_version: int = FOREST_FORMAT_VERSION


def _parse_concept(raw: Any, path: str) -> tuple[Concept, str | None]:
    obj = expect_object(raw, path)
    no_extra_keys(obj, {"id", "name", "parent", "attributes", "label"}, path)
    concept_id = expect_string(get_field(obj, "id", path), f"{path}.id")
    name = expect_string(get_field(obj, "name", path), f"{path}.name")
    parent = get_field(obj, "parent", path, required=False)
    if parent is not None:
        parent = expect_string(parent, f"{path}.parent")
    label = get_field(obj, "label", path, required=False)
    if label is not None:
        label = expect_string(label, f"{path}.label")
    attributes = {}
    raw_attrs = get_field(obj, "attributes", path, required=False, default={})
    for key, value in expect_object(raw_attrs, f"{path}.attributes").items():
        attributes[key] = expect_scalar(value, str, "a string",
                                        f"{path}.attributes.{key}")
    return Concept(concept_id, name, attributes, label), parent


def parse_tree_value(raw: Any, path: str = "tree") -> KnowledgeTree:
    """One tree entry of the document schema, fully validated."""
    obj = expect_object(raw, path)
    no_extra_keys(obj, {"tree_id", "root", "concepts", "relations"}, path)
    tree_id = expect_string(get_field(obj, "tree_id", path), f"{path}.tree_id")
    root = expect_string(get_field(obj, "root", path), f"{path}.root")

    concepts: list[Concept] = []
    relations: list[Relation] = []
    seen: set[str] = set()
    raw_concepts = expect_array(get_field(obj, "concepts", path), f"{path}.concepts")
    for i, raw_concept in enumerate(raw_concepts):
        cpath = f"{path}.concepts[{i}]"
        concept, parent = _parse_concept(raw_concept, cpath)
        if concept.id in seen:
            raise ValidationError(f"{cpath}.id duplicates concept {concept.id!r}")
        seen.add(concept.id)
        concepts.append(concept)
        if parent is not None:
            if parent == concept.id:
                raise ValidationError(
                    f"{cpath}.parent creates a hierarchy cycle: "
                    f"{concept.id!r} is its own parent")
            relations.append(Relation(parent, concept.id, HIERARCHY))

    raw_relations = expect_array(
        get_field(obj, "relations", path, required=False, default=[]),
        f"{path}.relations")
    for i, raw_relation in enumerate(raw_relations):
        rpath = f"{path}.relations[{i}]"
        robj = expect_object(raw_relation, rpath)
        no_extra_keys(robj, {"source", "target", "kind"}, rpath)
        kind = expect_string(get_field(robj, "kind", rpath), f"{rpath}.kind")
        if kind == HIERARCHY:
            raise ValidationError(
                f"{rpath}.kind must not be {HIERARCHY!r}; hierarchy edges come "
                f"from concept parent fields")
        if kind not in (PREREQUISITE, RELATED):
            raise ValidationError(
                f"{rpath}.kind must be {PREREQUISITE!r} or {RELATED!r}, "
                f"got {kind!r}")
        source = expect_string(get_field(robj, "source", rpath), f"{rpath}.source")
        target = expect_string(get_field(robj, "target", rpath), f"{rpath}.target")
        try:
            relations.append(Relation(source, target, kind))
        except FokeError as exc:
            raise ValidationError(f"{rpath}: {exc}") from exc

    try:
        return KnowledgeTree(tree_id, root, concepts, relations)
    except FokeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def parse_triples_value(raw: Any, known_ids: set[str],
                        path: str = "triples") -> tuple[Triple, ...]:
    """Training triples, each checked against the known concept ids."""
    triples: list[Triple] = []
    for i, raw_triple in enumerate(expect_array(raw, path)):
        tpath = f"{path}[{i}]"
        tobj = expect_object(raw_triple, tpath)
        no_extra_keys(tobj, {"source", "target", "kind"}, tpath)
        source = expect_string(get_field(tobj, "source", tpath), f"{tpath}.source")
        target = expect_string(get_field(tobj, "target", tpath), f"{tpath}.target")
        kind = expect_string(get_field(tobj, "kind", tpath), f"{tpath}.kind")
        if kind not in RELATION_KINDS:
            raise ValidationError(
                f"{tpath}.kind must be one of {', '.join(RELATION_KINDS)}, "
                f"got {kind!r}")
        for role, cid in (("source", source), ("target", target)):
            if cid not in known_ids:
                raise ValidationError(
                    f"{tpath}.{role} references unknown concept {cid!r}")
        triples.append((source, target, kind))
    return tuple(triples)


def parse_forest_document(data: bytes) -> ForestDocument:
    """Parse and fully validate a forest file; messages cite field paths."""
    top = expect_object(parse_json_bytes(data, "forest document"), "document")
    no_extra_keys(top, {"format_version", "trees", "triples"}, "document")
    check_version(top, FOREST_FORMAT_VERSION, "document")

    forest = KnowledgeForest()
    raw_trees = expect_array(get_field(top, "trees", "document"), "document.trees")
    for i, raw_tree in enumerate(raw_trees):
        tree = parse_tree_value(raw_tree, f"document.trees[{i}]")
        try:
            forest.insert_tree(tree)
        except DuplicateIdError as exc:
            raise ValidationError(f"document.trees[{i}]: {exc}") from exc

    triples = parse_triples_value(
        get_field(top, "triples", "document", required=False, default=[]),
        forest.concept_ids(), "document.triples")
    return ForestDocument(forest=forest, triples=triples)


def forest_document_value(document: ForestDocument) -> dict:
    """The document as plain JSON-ready data in canonical order."""
    trees = []
    for tree in document.forest.trees:
        parents = {rel.target: rel.source for rel in tree.relations
                   if rel.kind == HIERARCHY}
        concepts = []
        for concept in sorted(tree.concepts.values(), key=lambda c: c.id):
            entry: dict[str, Any] = {"id": concept.id, "name": concept.name}
            if concept.id in parents:
                entry["parent"] = parents[concept.id]
            if concept.attributes:
                entry["attributes"] = dict(sorted(concept.attributes.items()))
            if concept.label is not None:
                entry["label"] = concept.label
            concepts.append(entry)
        relations = [
            {"source": rel.source, "target": rel.target, "kind": rel.kind}
            for rel in tree.sorted_relations() if rel.kind != HIERARCHY
        ]
        entry = {"tree_id": tree.tree_id, "root": tree.root, "concepts": concepts}
        if relations:
            entry["relations"] = relations
        trees.append(entry)
    value: dict[str, Any] = {
        "format_version": document.format_version,
        "trees": trees,
    }
    if document.triples:
        value["triples"] = [
            {"source": s, "target": t, "kind": k} for s, t, k in document.triples
        ]
    return value


def serialize_forest_document(document: ForestDocument) -> bytes:
    return canonical_json_bytes(forest_document_value(document))


def load_forest_document(path: str) -> ForestDocument:
    with open(path, "rb") as handle:
        return parse_forest_document(handle.read())


# ---------------------------------------------------------------------------
# prompt template collections


def _parse_template(raw: Any, path: str) -> PromptTemplate:
    obj = expect_object(raw, path)
    no_extra_keys(obj, {"template_id", "goal", "explanation", "feedback", "slots"},
                   path)
    slots = {}
    raw_slots = get_field(obj, "slots", path, required=False, default={})
    for name, kind in expect_object(raw_slots, f"{path}.slots").items():
        kind = expect_string(kind, f"{path}.slots.{name}")
        if kind not in SLOT_KINDS:
            raise ValidationError(
                f"{path}.slots.{name} must be one of {', '.join(SLOT_KINDS)}, "
                f"got {kind!r}")
        slots[name] = kind
    try:
        return PromptTemplate(
            template_id=expect_string(get_field(obj, "template_id", path), f"{path}.template_id"),
            goal=expect_scalar(get_field(obj, "goal", path), str, "a string", f"{path}.goal"),
            explanation=expect_scalar(get_field(obj, "explanation", path), str, "a string",
                                f"{path}.explanation"),
            feedback=expect_scalar(get_field(obj, "feedback", path), str, "a string",
                             f"{path}.feedback"),
            slots=slots,
        )
    except FokeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def parse_templates(data: bytes) -> dict[str, PromptTemplate]:
    """Templates in file order (order is the selection tie-break)."""
    top = expect_object(parse_json_bytes(data, "template file"), "document")
    no_extra_keys(top, {"format_version", "templates"}, "document")
    check_version(top, TEMPLATES_FORMAT_VERSION, "document")
    templates: dict[str, PromptTemplate] = {}
    for i, raw in enumerate(expect_array(get_field(top, "templates", "document"),
                                 "document.templates")):
        template = _parse_template(raw, f"document.templates[{i}]")
        if template.template_id in templates:
            raise ValidationError(
                f"document.templates[{i}].template_id duplicates "
                f"{template.template_id!r}")
        templates[template.template_id] = template
    return templates


def templates_value(templates: Mapping[str, PromptTemplate]) -> dict:
    entries = []
    for template in templates.values():
        entry: dict[str, Any] = {
            "template_id": template.template_id,
            "goal": template.goal,
            "explanation": template.explanation,
            "feedback": template.feedback,
        }
        if template.slots:
            entry["slots"] = dict(sorted(template.slots.items()))
        entries.append(entry)
    return {"format_version": TEMPLATES_FORMAT_VERSION, "templates": entries}


def serialize_templates(templates: Mapping[str, PromptTemplate]) -> bytes:
    return canonical_json_bytes(templates_value(templates))


def load_templates(path: str) -> dict[str, PromptTemplate]:
    with open(path, "rb") as handle:
        return parse_templates(handle.read())


# ---------------------------------------------------------------------------
# profile records


@dataclass(frozen=True)
class ProfileRecord:
    """Raw profile inputs as authored in a profile file.

    Vectors are derived on demand (deterministic encoders + the current
    embedding table), so the record itself is the persistent state.
    """

    user_id: str
    attributes: tuple[tuple[str, str], ...] = ()
    behaviors: tuple[tuple[str, float], ...] = ()
    trajectory: tuple[tuple[str, float], ...] = ()
    mastery: tuple[float, ...] = ()

    @classmethod
    def build(cls, user_id: str, attributes: Mapping[str, str] = (),
              behaviors: Mapping[str, float] = (),
              trajectory: Sequence[tuple[str, float]] = (),
              mastery: Sequence[float] = ()) -> "ProfileRecord":
        return cls(
            user_id=user_id,
            attributes=tuple(sorted(dict(attributes).items())),
            behaviors=tuple(sorted((k, float(v)) for k, v in dict(behaviors).items())),
            trajectory=tuple((c, float(w)) for c, w in trajectory),
            mastery=tuple(float(v) for v in mastery),
        )

    def with_mastery(self, mastery: Sequence[float]) -> "ProfileRecord":
        return ProfileRecord(self.user_id, self.attributes, self.behaviors,
                             self.trajectory, tuple(float(v) for v in mastery))


def _parse_profile(raw: Any, path: str) -> ProfileRecord:
    obj = expect_object(raw, path)
    no_extra_keys(obj, {"user_id", "attributes", "behaviors", "trajectory",
                         "mastery"}, path)
    user_id = expect_string(get_field(obj, "user_id", path), f"{path}.user_id")

    attributes = {}
    for key, value in expect_object(get_field(obj, "attributes", path, required=False,
                                default={}), f"{path}.attributes").items():
        attributes[key] = expect_scalar(value, str, "a string", f"{path}.attributes.{key}")

    behaviors = {}
    raw_behaviors = get_field(obj, "behaviors", path, required=False, default={})
    for key, value in expect_object(raw_behaviors, f"{path}.behaviors").items():
        behaviors[key] = expect_number(value, f"{path}.behaviors.{key}")

    trajectory = []
    raw_trajectory = get_field(obj, "trajectory", path, required=False, default=[])
    for i, raw_event in enumerate(expect_array(raw_trajectory, f"{path}.trajectory")):
        epath = f"{path}.trajectory[{i}]"
        eobj = expect_object(raw_event, epath)
        no_extra_keys(eobj, {"concept", "weight"}, epath)
        concept = expect_string(get_field(eobj, "concept", epath), f"{epath}.concept")
        weight = expect_number(
            get_field(eobj, "weight", epath, required=False, default=1.0),
            f"{epath}.weight")
        trajectory.append((concept, weight))

    mastery = []
    raw_mastery = get_field(obj, "mastery", path, required=False, default=[])
    for i, value in enumerate(expect_array(raw_mastery, f"{path}.mastery")):
        number = expect_number(value, f"{path}.mastery[{i}]")
        if not 0.0 <= number <= 1.0:
            raise ValidationError(
                f"{path}.mastery[{i}] must lie in [0, 1], got {number!r}")
        mastery.append(number)

    return ProfileRecord.build(user_id, attributes, behaviors, trajectory, mastery)


def parse_profiles(data: bytes) -> dict[str, ProfileRecord]:
    top = expect_object(parse_json_bytes(data, "profile file"), "document")
    no_extra_keys(top, {"format_version", "profiles"}, "document")
    check_version(top, PROFILES_FORMAT_VERSION, "document")
    profiles: dict[str, ProfileRecord] = {}
    for i, raw in enumerate(expect_array(get_field(top, "profiles", "document"),
                                 "document.profiles")):
        record = _parse_profile(raw, f"document.profiles[{i}]")
        if record.user_id in profiles:
            raise ValidationError(
                f"document.profiles[{i}].user_id duplicates {record.user_id!r}")
        profiles[record.user_id] = record
    return profiles


def profiles_value(profiles: Mapping[str, ProfileRecord]) -> dict:
    entries = []
    for record in profiles.values():
        entry: dict[str, Any] = {"user_id": record.user_id}
        if record.attributes:
            entry["attributes"] = dict(record.attributes)
        if record.behaviors:
            entry["behaviors"] = dict(record.behaviors)
        if record.trajectory:
            entry["trajectory"] = [{"concept": c, "weight": w}
                                   for c, w in record.trajectory]
        entry["mastery"] = list(record.mastery)
        entries.append(entry)
    return {"format_version": PROFILES_FORMAT_VERSION, "profiles": entries}


def serialize_profiles(profiles: Mapping[str, ProfileRecord]) -> bytes:
    return canonical_json_bytes(profiles_value(profiles))


def load_profiles(path: str) -> dict[str, ProfileRecord]:
    with open(path, "rb") as handle:
        return parse_profiles(handle.read())


# ---------------------------------------------------------------------------
# engine snapshots


@dataclass
class EngineState:
    """Everything the engine needs to answer queries and retrain.

    The triple set rides along so a snapshot can be retrained without the
    source document.
    """

    forest: KnowledgeForest = field(default_factory=KnowledgeForest)
    triples: tuple[Triple, ...] = ()
    table: EmbeddingTable | None = None
    config: TrainConfig | None = None
    profiles: dict[str, ProfileRecord] = field(default_factory=dict)
    templates: dict[str, PromptTemplate] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EngineState):
            return NotImplemented
        return (self.forest == other.forest and self.triples == other.triples
                and self.table == other.table and self.config == other.config
                and self.profiles == other.profiles
                and self.templates == other.templates)


def _vector_map(vectors: Mapping[str, Any]) -> dict:
    return {key: [float(x) for x in vec] for key, vec in vectors.items()}


def _table_value(table: EmbeddingTable) -> dict:
    return {
        "dimension": table.dimension,
        "concepts": _vector_map(table.concept_vectors),
        "relations": _vector_map(table.relation_vectors),
        "trees": _vector_map(table.tree_vectors),
    }


def _parse_table(raw: Any, path: str) -> EmbeddingTable:
    obj = expect_object(raw, path)
    no_extra_keys(obj, {"dimension", "concepts", "relations", "trees"}, path)
    dimension = expect_int(get_field(obj, "dimension", path), f"{path}.dimension")
    try:
        table = EmbeddingTable(dimension)
        for section, setter in (("concepts", table.set_concept),
                                ("relations", table.set_relation),
                                ("trees", table.set_tree)):
            raw_section = get_field(obj, section, path, required=False, default={})
            for key, vec in expect_object(raw_section, f"{path}.{section}").items():
                setter(key, expect_array(vec, f"{path}.{section}.{key}"))
    except FokeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return table


def _config_value(config: TrainConfig) -> dict:
    return {
        "d": config.d,
        "margin": config.margin,
        "lambda_s": config.lambda_s,
        "lambda_u": config.lambda_u,
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "negatives_per_edge": config.negatives_per_edge,
        "seed": config.seed,
        "init_scale": config.init_scale,
    }


def parse_train_config(raw: Any, path: str = "config") -> TrainConfig:
    obj = expect_object(raw, path)
    fields = _config_value(TrainConfig())
    no_extra_keys(obj, set(fields), path)
    kwargs: dict[str, Any] = {}
    for name, default in fields.items():
        if name not in obj:
            continue
        value = obj[name]
        if isinstance(default, int):
            kwargs[name] = expect_int(value, f"{path}.{name}")
        else:
            kwargs[name] = expect_number(value, f"{path}.{name}")
    try:
        return TrainConfig(**kwargs)
    except FokeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def snapshot_value(state: EngineState) -> dict:
    document = ForestDocument(forest=state.forest, triples=state.triples)
    return {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "forest": forest_document_value(document),
        "table": None if state.table is None else _table_value(state.table),
        "config": None if state.config is None else _config_value(state.config),
        "profiles": profiles_value(state.profiles),
        "templates": templates_value(state.templates),
    }


def save_snapshot(state: EngineState) -> bytes:
    """Canonical JSON body plus a sha256 digest trailer line."""
    body = canonical_json_bytes(snapshot_value(state))
    return body + f"{_DIGEST_PREFIX}{sha256_hex(body)}\n".encode("ascii")


def load_snapshot(data: bytes) -> EngineState:
    """Verify the digest trailer, then rebuild the engine state."""
    trimmed = data.rstrip(b"\n")
    newline = trimmed.rfind(b"\n")
    if newline < 0:
        raise SnapshotCorruptError("snapshot has no digest trailer")
    body = data[:newline + 1]
    trailer = trimmed[newline + 1:].decode("ascii", errors="replace")
    if not trailer.startswith(_DIGEST_PREFIX):
        raise SnapshotCorruptError(
            f"snapshot trailer must start with {_DIGEST_PREFIX!r}, "
            f"got {trailer[:16]!r}")
    expected = trailer[len(_DIGEST_PREFIX):]
    actual = sha256_hex(body)
    if expected != actual:
        raise SnapshotCorruptError(
            f"snapshot digest mismatch: trailer says {expected[:12]}, "
            f"body hashes to {actual[:12]}")

    top = expect_object(parse_json_bytes(body, "snapshot"), "snapshot")
    no_extra_keys(top, {"format_version", "forest", "table", "config",
                         "profiles", "templates"}, "snapshot")
    check_version(top, SNAPSHOT_FORMAT_VERSION, "snapshot")

    document = parse_forest_document(
        canonical_json_bytes(get_field(top, "forest", "snapshot")))

    raw_table = get_field(top, "table", "snapshot", required=False)
    table = None if raw_table is None else _parse_table(raw_table, "snapshot.table")

    raw_config = get_field(top, "config", "snapshot", required=False)
    config = None if raw_config is None else parse_train_config(
        raw_config, "snapshot.config")

    profiles = parse_profiles(canonical_json_bytes(
        get_field(top, "profiles", "snapshot", required=False,
             default={"format_version": PROFILES_FORMAT_VERSION, "profiles": []})))
    templates = parse_templates(canonical_json_bytes(
        get_field(top, "templates", "snapshot", required=False,
             default={"format_version": TEMPLATES_FORMAT_VERSION, "templates": []})))

    return EngineState(forest=document.forest, triples=document.triples,
                       table=table, config=config, profiles=profiles,
                       templates=templates)


def write_snapshot(path: str, state: EngineState) -> None:
    write_bytes_atomic(path, save_snapshot(state))


def read_snapshot(path: str) -> EngineState:
    with open(path, "rb") as handle:
        return load_snapshot(handle.read())
