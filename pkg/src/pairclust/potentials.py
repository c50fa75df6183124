"""Pairwise evidence: similarities, the probability transform, unary energies.

Cosine similarities (or any user-supplied similarity in [0, 1]) are mapped to
a same-cluster probability by a two-piece linear ramp through (0, 0),
(tau, 0.5) and (1, 1), then converted to a pair of negative-log energies.
The threshold tau is the single tuning parameter of the whole pipeline: a
pair starts out linked exactly when its similarity exceeds tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PairTable, canonical

DEFAULT_TAU = 0.7
DEFAULT_EPS_CLAMP = 1e-6
DEFAULT_CONSTRAINT_ENERGY = 1e6


@dataclass(frozen=True)
class TransformParams:
    tau: float = DEFAULT_TAU
    eps_clamp: float = DEFAULT_EPS_CLAMP

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if not 0.0 < self.eps_clamp < 0.5:
            raise ValueError(f"eps_clamp must be in (0, 0.5), got {self.eps_clamp}")


def normalize_features(features: np.ndarray) -> np.ndarray:
    """Rows scaled to unit Euclidean norm. Zero or non-finite rows are errors."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    if not np.all(np.isfinite(features)):
        raise ValueError("feature matrix contains non-finite entries")
    norms = np.linalg.norm(features, axis=1)
    bad = np.nonzero(norms == 0.0)[0]
    if bad.size:
        raise ValueError(f"zero-norm feature row at index {bad[0]}")
    return features / norms[:, None]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vectors must have equal dimension")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def cosine_similarity_matrix(features: np.ndarray) -> np.ndarray:
    """Dense pairwise cosine similarities, clipped into [-1, 1]."""
    unit = normalize_features(features)
    sims = unit @ unit.T
    np.clip(sims, -1.0, 1.0, out=sims)
    return sims


def similarity_to_probability(
    s: np.ndarray | float, params: TransformParams = TransformParams()
) -> np.ndarray | float:
    """Two-piece linear map from similarity to same-cluster probability.

    Similarities are clamped into [0, 1] first (negative cosine values can
    occur for general embeddings); the output is clamped away from {0, 1} so
    the energies stay finite.
    """
    s = np.clip(s, 0.0, 1.0)
    tau = params.tau
    p = np.where(
        s <= tau,
        0.5 * s / tau,
        0.5 + 0.5 * (s - tau) / (1.0 - tau),
    )
    p = np.clip(p, params.eps_clamp, 1.0 - params.eps_clamp)
    if np.ndim(p) == 0:
        return float(p)
    return p


def unary_energies(p: np.ndarray | float) -> tuple[np.ndarray, np.ndarray] | tuple[float, float]:
    """Negative-log energies (e0, e1) of the two pair states.

    e1 charges the linked state, e0 the unlinked one; p must lie strictly
    inside (0, 1), which the transform's clamp guarantees.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("probability must lie strictly inside (0, 1)")
    e0 = -np.log1p(-p)
    e1 = -np.log(p)
    if p.ndim == 0:
        return float(e0), float(e1)
    return e0, e1


def table_from_similarity(
    sims: np.ndarray, params: TransformParams = TransformParams()
) -> PairTable:
    """Complete pair table with unaries derived from a square similarity matrix."""
    sims = np.asarray(sims, dtype=np.float64)
    if sims.ndim != 2 or sims.shape[0] != sims.shape[1]:
        raise ValueError("similarity matrix must be square")
    n = sims.shape[0]
    table = PairTable(n)
    pi, pj = table.endpoints()
    p = similarity_to_probability(sims[pi, pj], params)
    table.unary0, table.unary1 = unary_energies(p)
    return table


def table_from_features(
    features: np.ndarray, params: TransformParams = TransformParams()
) -> PairTable:
    """Complete pair table with unaries from cosine similarities of features."""
    return table_from_similarity(cosine_similarity_matrix(features), params)


def table_from_probabilities(p: np.ndarray, n_points: int) -> PairTable:
    """Complete pair table straight from condensed same-cluster probabilities."""
    table = PairTable(n_points)
    if p.shape[0] != table.n_pairs:
        raise ValueError("probability array does not match the pair count")
    table.unary0, table.unary1 = unary_energies(p)
    return table


@dataclass(frozen=True)
class ConstraintSet:
    """Must-link / cannot-link pair assertions. The two sets must be disjoint."""

    must_links: frozenset[tuple[int, int]]
    cannot_links: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        overlap = self.must_links & self.cannot_links
        if overlap:
            pair = sorted(overlap)[0]
            raise ValueError(f"pair {pair} is both must-link and cannot-link")

    @classmethod
    def from_pairs(cls, must=(), cannot=()) -> "ConstraintSet":
        return cls(
            frozenset(canonical(i, j) for i, j in must),
            frozenset(canonical(i, j) for i, j in cannot),
        )

    def __len__(self) -> int:
        return len(self.must_links) + len(self.cannot_links)

    def validate_indices(self, n_points: int) -> None:
        for i, j in self.must_links | self.cannot_links:
            if not (0 <= i < n_points and 0 <= j < n_points):
                raise ValueError(f"constraint pair ({i}, {j}) out of range")


def apply_constraints(
    table: PairTable,
    constraints: ConstraintSet,
    e_con: float = DEFAULT_CONSTRAINT_ENERGY,
) -> PairTable:
    """Override the unaries of constrained pairs with a dominating energy.

    Must-link pairs get (e0=e_con, e1=0), cannot-link pairs the reverse; the
    constrained pairs' messages and states are re-initialized from the new
    unaries. All other pairs are untouched. Constrained pairs must be stored
    in the table (an edge-mode table only stores graph edges).
    """
    constraints.validate_indices(table.n_points)
    if e_con <= 0.0:
        raise ValueError("e_con must be positive")
    for links, e0, e1 in (
        (constraints.must_links, e_con, 0.0),
        (constraints.cannot_links, 0.0, e_con),
    ):
        for i, j in sorted(links):
            p = table.pair_id(i, j)
            if p < 0:
                raise KeyError(
                    f"constrained pair ({i}, {j}) is not stored in the table; "
                    "edge-mode tables accept constraints on graph edges only"
                )
            table.unary0[p] = e0
            table.unary1[p] = e1
            table.msg0[p] = e0
            table.msg1[p] = e1
            table.state[p] = 1 if e1 < e0 else 0
    return table
