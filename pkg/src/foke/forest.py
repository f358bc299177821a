"""The knowledge-forest data structure.

A forest is an ordered collection of knowledge trees. Each tree is a rooted
hierarchy of concepts (every non-root concept has exactly one hierarchy
parent) plus any number of non-hierarchy relations between its concepts.
Trees can be inserted and removed independently, and within-tree relation
inference never compares concepts across trees; an instrumentation counter
records exactly how many candidate pairs were evaluated.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .embedding import EmbeddingTable, cosine
from .errors import (
    DuplicateIdError,
    NotFoundError,
    StructureError,
    ValidationError,
)

HIERARCHY = "hierarchy"
PREREQUISITE = "prerequisite"
RELATED = "related"
RELATION_KINDS = (HIERARCHY, PREREQUISITE, RELATED)


@dataclass
class Concept:
    """A single node: opaque id, display name, free-form attributes, and an
    optional class label consumed by the supervised loss."""

    id: str
    name: str
    attributes: dict[str, str] = field(default_factory=dict)
    label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("concept id must be nonempty")
        if not self.name:
            raise ValidationError(f"concept {self.id!r} must have a nonempty name")


@dataclass(frozen=True)
class Relation:
    """Directed edge between two concepts of the same tree.

    ``related`` edges are undirected in meaning and therefore canonicalized
    to (min, max) endpoint order, so a pair is stored exactly once and deep
    equality is order-insensitive.
    """

    source: str
    target: str
    kind: str

    def __post_init__(self):
        if not self.kind:
            raise ValidationError("relation kind must be nonempty")
        if self.source == self.target:
            raise StructureError(
                f"relation {self.kind!r} may not loop: {self.source!r} -> itself")
        if self.kind == RELATED and self.source > self.target:
            low, high = self.target, self.source
            object.__setattr__(self, "source", low)
            object.__setattr__(self, "target", high)

    def endpoints(self) -> frozenset[str]:
        return frozenset((self.source, self.target))


class KnowledgeTree:
    """Rooted tree of concepts; validates its structural invariants on build."""

    def __init__(self, tree_id: str, root: str, concepts, relations=()):
        if not tree_id:
            raise ValidationError("tree_id must be nonempty")
        self.tree_id = tree_id
        self.root = root
        self.concepts: dict[str, Concept] = {}
        for concept in concepts:
            if concept.id in self.concepts:
                raise DuplicateIdError(
                    f"tree {tree_id!r} declares concept {concept.id!r} twice")
            self.concepts[concept.id] = concept
        self.relations: set[Relation] = set(relations)
        self.validate()

    def validate(self) -> None:
        """Re-check every invariant; raises StructureError on the first break."""
        if not self.concepts:
            raise StructureError(f"tree {self.tree_id!r} must contain at least one concept")
        if self.root not in self.concepts:
            raise StructureError(
                f"tree {self.tree_id!r} root {self.root!r} is not one of its concepts")
        for rel in self.relations:
            for endpoint in (rel.source, rel.target):
                if endpoint not in self.concepts:
                    raise StructureError(
                        f"tree {self.tree_id!r} relation "
                        f"{rel.source!r}->{rel.target!r} ({rel.kind}) references "
                        f"unknown concept {endpoint!r}")
        parents: dict[str, str] = {}
        for rel in self.relations:
            if rel.kind != HIERARCHY:
                continue
            if rel.target == self.root:
                raise StructureError(
                    f"tree {self.tree_id!r}: root {self.root!r} may not have a "
                    f"hierarchy parent (edge {rel.source!r}->{rel.target!r})")
            if rel.target in parents:
                raise StructureError(
                    f"tree {self.tree_id!r}: concept {rel.target!r} has two hierarchy "
                    f"parents ({parents[rel.target]!r} and {rel.source!r})")
            parents[rel.target] = rel.source
        for cid in self.concepts:
            if cid != self.root and cid not in parents:
                raise StructureError(
                    f"tree {self.tree_id!r}: concept {cid!r} is not reachable from "
                    f"the root via hierarchy edges (no parent)")
        # Every non-root node has exactly one parent, so any unreachable node
        # sits on a cycle; walking to the root from each node exposes it.
        for cid in self.concepts:
            seen = []
            current = cid
            while current != self.root:
                if current in seen:
                    cycle = seen[seen.index(current):] + [current]
                    raise StructureError(
                        f"tree {self.tree_id!r}: hierarchy cycle "
                        f"{' -> '.join(repr(c) for c in cycle)}")
                seen.append(current)
                current = parents[current]

    def has_edge_between(self, a: str, b: str) -> bool:
        """True if any relation, of any kind or direction, joins a and b."""
        pair = frozenset((a, b))
        return any(rel.endpoints() == pair for rel in self.relations)

    def neighbors(self, concept_id: str, kinds=None) -> set[str]:
        """Undirected neighbors of a concept, optionally filtered by kind."""
        out: set[str] = set()
        for rel in self.relations:
            if kinds is not None and rel.kind not in kinds:
                continue
            if rel.source == concept_id:
                out.add(rel.target)
            elif rel.target == concept_id:
                out.add(rel.source)
        return out

    def sorted_relations(self) -> list[Relation]:
        return sorted(self.relations, key=lambda r: (r.kind, r.source, r.target))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeTree):
            return NotImplemented
        return (self.tree_id == other.tree_id and self.root == other.root
                and self.concepts == other.concepts
                and self.relations == other.relations)

    def __len__(self) -> int:
        return len(self.concepts)

    def __repr__(self) -> str:
        return (f"KnowledgeTree({self.tree_id!r}, root={self.root!r}, "
                f"{len(self.concepts)} concepts, {len(self.relations)} relations)")


class KnowledgeForest:
    """Ordered collection of trees with globally unique concept ids.

    Mutations (insert, remove, relation inference) are serialized by an
    internal lock; readers see a consistent snapshot. The comparison counter
    measures pairwise similarity evaluations, including repeats, and is
    deliberately excluded from equality.
    """

    def __init__(self, trees=()):
        self.trees: list[KnowledgeTree] = []
        self.comparison_counter = 0
        self._lock = threading.RLock()
        for tree in trees:
            self.insert_tree(tree)

    def insert_tree(self, tree: KnowledgeTree) -> "KnowledgeForest":
        tree.validate()
        with self._lock:
            if any(t.tree_id == tree.tree_id for t in self.trees):
                raise DuplicateIdError(f"tree id {tree.tree_id!r} already in forest")
            existing = self.concept_ids()
            for cid in tree.concepts:
                if cid in existing:
                    raise DuplicateIdError(
                        f"concept id {cid!r} (tree {tree.tree_id!r}) already in forest")
            self.trees.append(tree)
        return self

    def remove_tree(self, tree_id: str) -> "KnowledgeForest":
        with self._lock:
            for i, tree in enumerate(self.trees):
                if tree.tree_id == tree_id:
                    del self.trees[i]
                    return self
        raise NotFoundError(f"no tree with id {tree_id!r}")

    def tree(self, tree_id: str) -> KnowledgeTree:
        for tree in self.trees:
            if tree.tree_id == tree_id:
                return tree
        raise NotFoundError(f"no tree with id {tree_id!r}")

    def tree_index(self, tree_id: str) -> int:
        for i, tree in enumerate(self.trees):
            if tree.tree_id == tree_id:
                return i
        raise NotFoundError(f"no tree with id {tree_id!r}")

    def concept_ids(self) -> set[str]:
        return {cid for tree in self.trees for cid in tree.concepts}

    def find_concept(self, concept_id: str) -> tuple[KnowledgeTree, Concept]:
        for tree in self.trees:
            if concept_id in tree.concepts:
                return tree, tree.concepts[concept_id]
        raise NotFoundError(f"no concept with id {concept_id!r}")

    def all_concepts(self) -> list[Concept]:
        return [c for tree in self.trees for c in tree.concepts.values()]

    def all_relations(self) -> list[Relation]:
        return [r for tree in self.trees for r in tree.sorted_relations()]

    @property
    def size(self) -> int:
        return len(self.trees)

    def infer_relations_local(self, tree_id: str, table: EmbeddingTable,
                              tau_c: float = 0.8) -> KnowledgeTree:
        """Add a ``related`` edge for every unembedded-edge concept pair of one
        tree whose cosine similarity reaches ``tau_c``.

        Evaluates exactly n*(n-1)/2 pairs for a tree of n concepts and bumps
        the comparison counter by that amount even when rerun, so the counter
        measures work performed, not edges produced.
        """
        if not -1.0 <= tau_c <= 1.0:
            raise ValidationError(f"tau_c must lie in [-1, 1], got {tau_c}")
        with self._lock:
            tree = self.tree(tree_id)
            vectors = {cid: table.concept(cid) for cid in tree.concepts}
            ids = sorted(tree.concepts)
            for i, a in enumerate(ids):
                for b in ids[i + 1:]:
                    self.comparison_counter += 1
                    if tree.has_edge_between(a, b):
                        continue
                    if cosine(vectors[a], vectors[b]) >= tau_c:
                        tree.relations.add(Relation(a, b, RELATED))
            return tree

    def infer_all_relations(self, table: EmbeddingTable, tau_c: float = 0.8) -> None:
        for tree in list(self.trees):
            self.infer_relations_local(tree.tree_id, table, tau_c)

    def pair_comparison_count(self) -> int:
        return self.comparison_counter

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeForest):
            return NotImplemented
        return self.trees == other.trees

    def __len__(self) -> int:
        return len(self.trees)

    def __repr__(self) -> str:
        return f"KnowledgeForest({[t.tree_id for t in self.trees]!r})"
