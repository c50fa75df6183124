"""Exact and approximate k-nearest-neighbor graphs over feature vectors.

The approximate builder grows a small forest of randomized median-split
trees (split dimension drawn among the subset's top-variance dimensions) and
answers queries best-bin-first with a shared leaf-check budget across trees.
Neighbor ranking is cosine similarity on unit-normalized rows, which on the
unit sphere orders identically to Euclidean distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import kd_forest_query
from .potentials import normalize_features

LEAF_SIZE = 10
TOP_VARIANCE_DIMS = 5


@dataclass(frozen=True)
class KnnConfig:
    """Graph-construction knobs; the defaults are desk-scale."""

    k: int = 20
    num_trees: int = 4
    search_size: int = 200
    exact: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.search_size < self.k:
            raise ValueError("search_size must be >= k")


@dataclass(frozen=True)
class KnnGraphResult:
    """Per-point neighbor lists plus the symmetrized canonical edge set."""

    neighbors: np.ndarray  # (n, k) point indices, best first
    edges: np.ndarray      # (E, 2) canonical pairs, lexicographically sorted

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]


def _symmetrized_edges(neighbors: np.ndarray) -> np.ndarray:
    n, k = neighbors.shape
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = neighbors.reshape(-1).astype(np.int64)
    keep = dst >= 0
    src, dst = src[keep], dst[keep]
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    keys = np.unique(lo * np.int64(n) + hi)
    return np.column_stack((keys // n, keys % n))


def build_exact(features: np.ndarray, k: int) -> KnnGraphResult:
    """Brute-force k-NN by cosine similarity; ties prefer the lower index."""
    unit = normalize_features(features)
    n = unit.shape[0]
    if not 1 <= k < n:
        raise ValueError("k must satisfy 1 <= k < n")
    neighbors = np.empty((n, k), dtype=np.int64)
    chunk = max(1, min(n, 8_000_000 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        sims = unit[start:stop] @ unit.T
        sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        # stable sort on -sims keeps ascending index order among ties
        order = np.argsort(-sims, axis=1, kind="stable")
        neighbors[start:stop] = order[:, :k]
    return KnnGraphResult(neighbors=neighbors, edges=_symmetrized_edges(neighbors))


class _ForestArrays:
    """Flat node arrays of a whole forest, shared by all queries."""

    def __init__(self) -> None:
        self.dim: list[int] = []
        self.val: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.start: list[int] = []
        self.end: list[int] = []
        self.leaf_points: list[np.ndarray] = []
        self.leaf_cursor = 0
        self.roots: list[int] = []

    def add_leaf(self, indices: np.ndarray) -> int:
        node = len(self.dim)
        self.dim.append(-1)
        self.val.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.start.append(self.leaf_cursor)
        self.end.append(self.leaf_cursor + indices.shape[0])
        self.leaf_points.append(indices)
        self.leaf_cursor += indices.shape[0]
        return node

    def add_internal(self, dim: int, val: float) -> int:
        node = len(self.dim)
        self.dim.append(dim)
        self.val.append(val)
        self.left.append(-1)
        self.right.append(-1)
        self.start.append(-1)
        self.end.append(-1)
        return node


def _build_tree(arrays: _ForestArrays, data: np.ndarray, indices: np.ndarray,
                rng: np.random.Generator) -> int:
    if indices.shape[0] <= LEAF_SIZE:
        return arrays.add_leaf(indices)
    subset = data[indices]
    variances = subset.var(axis=0)
    top = min(TOP_VARIANCE_DIMS, data.shape[1])
    candidates = np.argsort(-variances, kind="stable")[:top]
    dim = int(candidates[rng.integers(top)])
    coords = subset[:, dim]
    mid = indices.shape[0] // 2
    order = np.argpartition(coords, mid)
    val = float(coords[order[mid]])
    node = arrays.add_internal(dim, val)
    left = _build_tree(arrays, data, np.sort(indices[order[:mid]]), rng)
    right = _build_tree(arrays, data, np.sort(indices[order[mid:]]), rng)
    arrays.left[node] = left
    arrays.right[node] = right
    return node


def build_approx(
    features: np.ndarray, cfg: KnnConfig = KnnConfig(), seed: int = 42
) -> KnnGraphResult:
    """Randomized-forest approximate k-NN graph.

    With a single tree and a budget covering the whole dataset the traversal
    degenerates to a full scan, reproducing :func:`build_exact`.
    """
    unit = np.ascontiguousarray(normalize_features(features))
    n = unit.shape[0]
    if not 1 <= cfg.k < n:
        raise ValueError("k must satisfy 1 <= k < n")
    if cfg.exact:
        return build_exact(features, cfg.k)
    arrays = _ForestArrays()
    for t in range(cfg.num_trees):
        rng = np.random.default_rng(seed + t)
        arrays.roots.append(_build_tree(arrays, unit, np.arange(n, dtype=np.int64), rng))
    out_idx = np.empty((n, cfg.k), dtype=np.int64)
    out_sim = np.empty((n, cfg.k))
    kd_forest_query(
        unit,
        np.asarray(arrays.dim, dtype=np.int64),
        np.asarray(arrays.val),
        np.asarray(arrays.left, dtype=np.int64),
        np.asarray(arrays.right, dtype=np.int64),
        np.asarray(arrays.start, dtype=np.int64),
        np.asarray(arrays.end, dtype=np.int64),
        np.concatenate(arrays.leaf_points) if arrays.leaf_points else np.empty(0, np.int64),
        np.asarray(arrays.roots, dtype=np.int64),
        cfg.k,
        cfg.search_size,
        out_idx,
        out_sim,
    )
    return KnnGraphResult(neighbors=out_idx, edges=_symmetrized_edges(out_idx))


def recall_at_k(approx: KnnGraphResult, exact: KnnGraphResult) -> float:
    """Mean fraction of true k-nearest neighbors recovered per point."""
    if approx.neighbors.shape != exact.neighbors.shape:
        raise ValueError("neighbor lists have mismatched shapes")
    hits = 0
    for row_a, row_e in zip(approx.neighbors, exact.neighbors):
        hits += len(set(row_a.tolist()) & set(row_e.tolist()))
    return hits / exact.neighbors.size
