"""Taxonomy alignment under RCC-5 articulations and covering constraints.

Parse two rooted taxonomies plus expert-asserted articulations, decide
consistency, explain and repair inconsistencies, enumerate every possible
merged world, compute maximally informative relations, reduce ambiguity
interactively, and render merge visualizations.
"""

from .analysis import (
    Question,
    ReductionSession,
    apply_answer,
    consensus,
    diagnose,
    mir,
    mir_provenance,
    next_question,
    world_distance,
)
from .engine import (
    Budget,
    BudgetExceededError,
    RegionGrid,
    SolverStats,
    build_grid,
    check_consistency,
    encode,
    enumerate_worlds,
    relation_map_of,
)
from .model import (
    Alignment,
    Articulation,
    ConstraintFlags,
    Diagnosis,
    MirTable,
    Taxonomy,
    World,
    validate,
)
from .parser import (
    AlignmentSyntaxError,
    parse_alignment,
    serialize_alignment,
    try_parse_alignment,
)
from .relations import BaseRelation, RelationMask, base_relation_of, compose, converse

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AlignmentSyntaxError",
    "Articulation",
    "BaseRelation",
    "Budget",
    "BudgetExceededError",
    "ConstraintFlags",
    "Diagnosis",
    "MirTable",
    "Question",
    "ReductionSession",
    "RegionGrid",
    "RelationMask",
    "SolverStats",
    "Taxonomy",
    "World",
    "apply_answer",
    "base_relation_of",
    "build_grid",
    "check_consistency",
    "compose",
    "consensus",
    "converse",
    "diagnose",
    "encode",
    "enumerate_worlds",
    "mir",
    "mir_provenance",
    "next_question",
    "parse_alignment",
    "relation_map_of",
    "serialize_alignment",
    "try_parse_alignment",
    "validate",
    "world_distance",
]
