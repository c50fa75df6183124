"""Pairwise adjacency clustering via min-sum belief propagation."""

from .engine import (
    BPConfig,
    ConvergenceTrace,
    count_inconsistent_triplets,
    exhaustive_min_energy_partition,
    partition_energy,
    run,
    triplet_energy,
    update_message,
)
from .model import (
    EnergyPair,
    PairTable,
    Partition,
    canonical,
    partition_from_adjacency,
)
from .potentials import (
    ConstraintSet,
    TransformParams,
    apply_constraints,
    cosine_similarity,
    similarity_to_probability,
    table_from_features,
    table_from_probabilities,
    table_from_similarity,
    unary_energies,
)

__version__ = "0.1.0"

__all__ = [
    "BPConfig",
    "ConstraintSet",
    "ConvergenceTrace",
    "EnergyPair",
    "PairTable",
    "Partition",
    "TransformParams",
    "apply_constraints",
    "canonical",
    "cosine_similarity",
    "count_inconsistent_triplets",
    "exhaustive_min_energy_partition",
    "partition_energy",
    "partition_from_adjacency",
    "run",
    "similarity_to_probability",
    "table_from_features",
    "table_from_probabilities",
    "table_from_similarity",
    "triplet_energy",
    "unary_energies",
    "update_message",
]
