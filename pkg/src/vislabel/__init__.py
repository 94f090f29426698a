"""Iterative human-in-the-loop image labeling over a growing category tree."""

from .hierarchy import (
    Category,
    CategoryId,
    Hierarchy,
    LabelPath,
    Violation,
    create_hierarchy,
)
from .similarity import (
    CandidateRanking,
    FeatureVector,
    category_centroid,
    cosine,
    rank_candidates,
)
from .ingestion import (
    BoundingBox,
    CropRect,
    ImageRecord,
    ObjectInstance,
    explode,
    load_manifest,
    square_crop,
)
from .loops import (
    Answer,
    NewCategoryPayload,
    Oracle,
    Question,
    ScriptedOracle,
    SimulatedOracle,
    Transcript,
    horizontal_loop,
    label_object,
    simulated_oracle,
    vertical_loop,
)
from .agreement import (
    AlphaReport,
    ReliabilityData,
    coincidence_matrix,
    krippendorff_alpha_nominal,
)
from .session import Session, SessionConfig, SessionEvent
from .exports import export_dataset, reimport_dataset

__version__ = "0.1.0"

__all__ = [
    "AlphaReport",
    "Answer",
    "BoundingBox",
    "CandidateRanking",
    "Category",
    "CategoryId",
    "CropRect",
    "FeatureVector",
    "Hierarchy",
    "ImageRecord",
    "LabelPath",
    "NewCategoryPayload",
    "ObjectInstance",
    "Oracle",
    "Question",
    "ReliabilityData",
    "ScriptedOracle",
    "Session",
    "SessionConfig",
    "SessionEvent",
    "SimulatedOracle",
    "Transcript",
    "Violation",
    "category_centroid",
    "coincidence_matrix",
    "cosine",
    "create_hierarchy",
    "explode",
    "export_dataset",
    "horizontal_loop",
    "krippendorff_alpha_nominal",
    "label_object",
    "load_manifest",
    "rank_candidates",
    "reimport_dataset",
    "simulated_oracle",
    "square_crop",
    "vertical_loop",
]
