"""Learner profiles: attribute/behavior/trajectory encoders, attention
fusion into one user vector, and per-tree mastery state.

The attribute and behavior encoders are deterministic hashing featurizers
(tokens projected through a fixed seeded random matrix), so profiles are
reproducible without any training. Fusion weights are configuration, not
learned parameters.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .embedding import EmbeddingTable, as_vector, softmax
from .errors import DimensionError, ValidationError

FEATURE_BUCKETS = 256
ENCODER_SEED = 1337


class MasteryState:
    """Per-tree mastery levels in [0, 1]; immutable, updates return copies."""

    def __init__(self, values: Iterable[float]):
        self.values = tuple(float(v) for v in values)
        for i, v in enumerate(self.values):
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"mastery[{i}] must lie in [0, 1], got {v}")

    @classmethod
    def zeros(cls, k: int) -> "MasteryState":
        return cls((0.0,) * k)

    def updated(self, k: int, delta: float) -> "MasteryState":
        """Additive-with-clamp update of one entry: s_k <- min(1, s_k + delta)."""
        if not 0.0 <= delta <= 1.0:
            raise ValidationError(f"delta must lie in [0, 1], got {delta}")
        if not 0 <= k < len(self.values):
            raise ValidationError(
                f"tree index {k} out of range for {len(self.values)} trees")
        values = list(self.values)
        values[k] = min(1.0, values[k] + delta)
        return MasteryState(values)

    def resized(self, k: int) -> "MasteryState":
        """Track forest growth/shrinkage: new trees start at 0, trailing
        entries of removed trees are dropped."""
        if k < 0:
            raise ValidationError(f"cannot resize to {k} trees")
        values = list(self.values[:k])
        values.extend(0.0 for _ in range(k - len(values)))
        return MasteryState(values)

    def without_index(self, k: int) -> "MasteryState":
        if not 0 <= k < len(self.values):
            raise ValidationError(
                f"tree index {k} out of range for {len(self.values)} trees")
        return MasteryState(self.values[:k] + self.values[k + 1:])

    def all_mastered(self, goal: float = 1.0) -> bool:
        return all(v >= goal for v in self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MasteryState):
            return NotImplemented
        return self.values == other.values

    def __repr__(self) -> str:
        return f"MasteryState({list(self.values)!r})"


def update_mastery(state: MasteryState, k: int, delta: float) -> MasteryState:
    return state.updated(k, delta)


@dataclass
class UserProfile:
    """Attribute, behavior, and trajectory vectors plus mastery state."""

    user_id: str
    attributes: np.ndarray
    behaviors: np.ndarray
    trajectory: np.ndarray
    mastery: MasteryState = field(default_factory=lambda: MasteryState(()))

    def __post_init__(self):
        self.attributes = as_vector(self.attributes)
        d = self.attributes.shape[0]
        self.behaviors = as_vector(self.behaviors, d)
        self.trajectory = as_vector(self.trajectory, d)


@dataclass
class FusionWeights:
    """Attention weight vectors for the three profile dimensions."""

    w_a: np.ndarray
    w_b: np.ndarray
    w_t: np.ndarray

    def __post_init__(self):
        self.w_a = as_vector(self.w_a)
        self.w_b = as_vector(self.w_b, self.w_a.shape[0])
        self.w_t = as_vector(self.w_t, self.w_a.shape[0])

    @classmethod
    def uniform(cls, d: int) -> "FusionWeights":
        """Zero weights: every dimension scores 0, attention is exactly 1/3."""
        return cls(np.zeros(d), np.zeros(d), np.zeros(d))


class FusionResult(NamedTuple):
    alpha_a: float
    alpha_b: float
    alpha_t: float
    h_u: np.ndarray


def attention_fuse(profile: UserProfile, weights: FusionWeights) -> FusionResult:
    """Softmax-attention blend of the three profile vectors.

    Scores are the dot products of each dimension with its weight vector;
    the attention coefficients are their softmax and always form a
    probability vector, so h_u lies in the convex hull of the inputs.
    """
    if weights.w_a.shape[0] != profile.attributes.shape[0]:
        raise DimensionError(
            f"fusion weights have dimension {weights.w_a.shape[0]}, "
            f"profile has {profile.attributes.shape[0]}")
    scores = np.array([
        float(weights.w_a @ profile.attributes),
        float(weights.w_b @ profile.behaviors),
        float(weights.w_t @ profile.trajectory),
    ])
    alpha = softmax(scores)
    h_u = (alpha[0] * profile.attributes + alpha[1] * profile.behaviors
           + alpha[2] * profile.trajectory)
    return FusionResult(float(alpha[0]), float(alpha[1]), float(alpha[2]), h_u)


def encode_trajectory(events: Sequence[tuple[str, float]], table: EmbeddingTable,
                      decay: float = 0.5) -> np.ndarray:
    """Exponentially decayed, weight-scaled sum of event-concept vectors,
    normalized to unit length.

    The most recent (last) event carries decay exponent 0. An empty event
    list, or one whose weighted sum cancels to zero, yields the zero vector.
    """
    if not 0.0 < decay <= 1.0:
        raise ValidationError(f"decay must lie in (0, 1], got {decay}")
    total = np.zeros(table.dimension)
    n = len(events)
    for j, (concept_id, weight) in enumerate(events):
        total += (decay ** (n - 1 - j)) * float(weight) * table.concept(concept_id)
    norm = np.linalg.norm(total)
    if norm == 0.0:
        return total
    return total / norm


def _bucket(token: str) -> int:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % FEATURE_BUCKETS


def _projection(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((FEATURE_BUCKETS, d)) / np.sqrt(d)


def encode_features(features: Mapping[str, float], d: int,
                    seed: int = ENCODER_SEED) -> np.ndarray:
    """Project weighted string features through a fixed seeded random matrix
    and normalize; the deterministic backbone of the attribute and behavior
    encoders."""
    if d < 1:
        raise ValidationError(f"dimension must be >= 1, got {d}")
    projection = _projection(d, seed)
    total = np.zeros(d)
    for token, weight in features.items():
        total += float(weight) * projection[_bucket(token)]
    norm = np.linalg.norm(total)
    if norm == 0.0:
        return total
    return total / norm


def encode_attributes(attributes: Mapping[str, str], d: int,
                      seed: int = ENCODER_SEED) -> np.ndarray:
    """One token per key=value pair, unit weight each."""
    return encode_features({f"{k}={v}": 1.0 for k, v in attributes.items()}, d, seed)


def encode_behaviors(counts: Mapping[str, float], d: int,
                     seed: int = ENCODER_SEED) -> np.ndarray:
    """Event names weighted by their counts."""
    return encode_features(dict(counts), d, seed)


def build_profile(user_id: str, attributes: Mapping[str, str],
                  behaviors: Mapping[str, float],
                  trajectory_events: Sequence[tuple[str, float]],
                  table: EmbeddingTable, mastery: MasteryState,
                  decay: float = 0.5) -> UserProfile:
    """Assemble a profile from raw records using the deterministic encoders."""
    return UserProfile(
        user_id=user_id,
        attributes=encode_attributes(attributes, table.dimension),
        behaviors=encode_behaviors(behaviors, table.dimension),
        trajectory=encode_trajectory(trajectory_events, table, decay),
        mastery=mastery,
    )
