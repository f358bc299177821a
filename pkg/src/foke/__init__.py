"""Forest-of-knowledge engine.

A dynamic collection of rooted concept trees with learned embeddings on
top: margin-ranking triple training (optionally mixed with supervised and
contrastive objectives), tree-level relation inference, mastery-driven
next-tree recommendation, attention-fused user profiles, slotted prompt
construction, a learner simulator, canonical file formats, and an HTTP
facade. See the README for the command line and service surfaces.
"""

from .embedding import (
    EmbeddingTable,
    GnnLayerParams,
    TrainConfig,
    as_vector,
    cosine,
    gnn_layer,
    propagate,
    root_embedding,
    softmax,
)
from .errors import (
    ConflictError,
    DimensionError,
    DuplicateIdError,
    FokeError,
    MissingEmbeddingError,
    NotFoundError,
    SlotError,
    SnapshotCorruptError,
    StructureError,
    TrainingDivergedError,
    ValidationError,
    ZeroVectorError,
)
from .estimators import ForestEmbedder, NextTreeRecommender
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
from .inference import (
    InferenceConfig,
    TreeRelationMatrix,
    recommend_next,
    recommendation_scores,
    retrieve_tree,
    similarity,
    tree_relations,
)
from .losses import (
    ClassifierParams,
    SupervisionData,
    combined_loss,
    contrastive_loss,
    contrastive_loss_gradients,
    finite_diff_gradient,
    supervised_loss,
    supervised_loss_gradients,
    triple_loss,
    triple_loss_gradients,
)
from .profiles import (
    FusionResult,
    FusionWeights,
    MasteryState,
    UserProfile,
    attention_fuse,
    build_profile,
    encode_attributes,
    encode_behaviors,
    encode_trajectory,
    update_mastery,
)
from .prompts import (
    PromptTemplate,
    PromptText,
    SubForest,
    SubTree,
    TaskSpec,
    choose_prompt,
    default_reward,
    derive_slot_values,
    instantiate,
    join_concept_list,
    retrieve_task_subforest,
    score_prompt,
    select_best_template,
)
from .service import Engine, create_app
from .simulate import SimConfig, SimStep, simulate_learner, trajectory_lines
from .store import (
    EngineState,
    ForestDocument,
    ProfileRecord,
    canonical_json_bytes,
    load_forest_document,
    load_profiles,
    load_snapshot,
    load_templates,
    parse_forest_document,
    parse_profiles,
    parse_templates,
    parse_train_config,
    read_snapshot,
    save_snapshot,
    serialize_forest_document,
    serialize_profiles,
    serialize_templates,
    write_snapshot,
)
from .training import EpochLoss, TrainResult, collect_labels, epoch_line, train

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
