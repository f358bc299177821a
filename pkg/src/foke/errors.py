"""Exception hierarchy shared across the engine.

Every error carries a machine-readable ``code`` so the HTTP service can
mirror library failures verbatim in its error payloads.
"""

from __future__ import annotations


class FokeError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail


class ValidationError(FokeError):
    """Input violates a documented precondition or schema."""

    code = "validation"


class StructureError(ValidationError):
    """A tree or forest breaks a structural invariant (rooted-tree shape,
    dangling reference, duplicate id)."""

    code = "structure"


class DuplicateIdError(StructureError):
    code = "duplicate_id"


class NotFoundError(FokeError):
    code = "not_found"


class DimensionError(ValidationError):
    """Vector length disagrees with the table dimension or a peer vector."""

    code = "dimension_mismatch"


class MissingEmbeddingError(FokeError):
    """An operation needed a vector that the table does not hold."""

    code = "missing_embedding"


class ZeroVectorError(ValidationError):
    """Cosine similarity is undefined for the zero vector; callers must not
    silently treat it as orthogonal-to-everything."""

    code = "zero_vector"


class SlotError(ValidationError):
    """Missing, undeclared, or kind-incompatible template slot."""

    code = "slot"

    def __init__(self, message: str, slot: str, template_id: str | None = None):
        super().__init__(message, detail={"slot": slot, "template_id": template_id})
        self.slot = slot
        self.template_id = template_id


class SnapshotCorruptError(FokeError):
    code = "corrupt_snapshot"


class TrainingDivergedError(FokeError):
    """Training produced a non-finite loss; ``epoch`` names the first bad one."""

    code = "diverged"

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}: loss is not finite",
                         detail={"epoch": epoch})
        self.epoch = epoch


class ConflictError(FokeError):
    """A mutation raced a running training job."""

    code = "conflict"
