"""Shared data types for pairs, energies, adjacency and partitions.

The central object is the :class:`PairTable`, a symmetric store of per-pair
unary energies, message energies and binary adjacency states. Pairs are
keyed canonically with ``i < j``; a table either covers the complete graph
(implicit pair set, condensed triangular indexing) or an explicit edge set
(the symmetrized k-NN graph).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from ._kernels import union_find_roots


class EnergyPair(NamedTuple):
    """Energies of the two states of a pair variable (0 = apart, 1 = together)."""

    e0: float
    e1: float

    @property
    def adjacent(self) -> bool:
        # Strict comparison: ties classify as not-adjacent.
        return self.e1 < self.e0


def canonical(i: int, j: int) -> tuple[int, int]:
    """Return the canonical ``(min, max)`` ordering of a pair key.

    Self-pairs do not exist; ``i == j`` raises ``ValueError``.
    """
    if i == j:
        raise ValueError(f"self-pair ({i}, {j}) is not a valid pair key")
    return (i, j) if i < j else (j, i)


def condensed_index(n: int, i: int, j: int) -> int:
    """Index of canonical pair (i, j), i < j, in condensed triangular order."""
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def pair_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays (pi, pj) of all pairs of a complete graph in condensed order."""
    return np.triu_indices(n, k=1)


class PairTable:
    """Symmetric sparse store of per-pair unary energies, messages and states.

    In full mode the table holds all ``n (n - 1) / 2`` pairs implicitly; in
    edge mode it holds exactly the given canonical edge set. Lookups accept
    either ``(i, j)`` or ``(j, i)`` and resolve to the canonical entry.

    The writable arrays (``msg0``, ``msg1``, ``state``) are rewritten in bulk
    phases by the engine; between phases the table is safe to share across
    threads for reading.
    """

    def __init__(self, n_points: int, edges: np.ndarray | None = None):
        if n_points < 2:
            raise ValueError("a pair table needs at least two points")
        self.n_points = int(n_points)
        if edges is None:
            self._edges = None
            n_pairs = n_points * (n_points - 1) // 2
            pi, pj = pair_endpoints(n_points)
            self._pi = pi.astype(np.int64)
            self._pj = pj.astype(np.int64)
        else:
            edges = np.asarray(edges, dtype=np.int64)
            if edges.ndim != 2 or edges.shape[1] != 2:
                raise ValueError("edges must be an (E, 2) array")
            if edges.shape[0] == 0:
                raise ValueError("edge table needs at least one edge")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must be canonical (i < j)")
            if np.any(edges < 0) or np.any(edges >= n_points):
                raise ValueError("edge endpoint out of range")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            key = edges[:, 0] * n_points + edges[:, 1]
            if np.any(np.diff(key) == 0):
                raise ValueError("duplicate edges")
            self._edges = edges
            self._pi = edges[:, 0].copy()
            self._pj = edges[:, 1].copy()
            n_pairs = edges.shape[0]
            self._build_edge_csr()
        self.unary0 = np.zeros(n_pairs)
        self.unary1 = np.zeros(n_pairs)
        self.msg0 = np.zeros(n_pairs)
        self.msg1 = np.zeros(n_pairs)
        self.state = np.zeros(n_pairs, dtype=np.uint8)

    def _build_edge_csr(self) -> None:
        # Static per-point adjacency over the edge set: for each point the
        # sorted incident endpoints plus the matching edge ids.
        n = self.n_points
        ei, ej = self._pi, self._pj
        deg = np.bincount(ei, minlength=n) + np.bincount(ej, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        edge_ids = np.empty(indptr[-1], dtype=np.int64)
        cursor = indptr[:-1].copy()
        for e in range(ei.shape[0]):
            a, b = ei[e], ej[e]
            indices[cursor[a]] = b
            edge_ids[cursor[a]] = e
            cursor[a] += 1
            indices[cursor[b]] = a
            edge_ids[cursor[b]] = e
            cursor[b] += 1
        # Lexicographic edge order fills every row in ascending neighbor order.
        self.graph_indptr = indptr
        self.graph_indices = indices
        self.graph_edge_ids = edge_ids

    # -- basic geometry -------------------------------------------------

    @property
    def n_pairs(self) -> int:
        return self.unary0.shape[0]

    @property
    def is_complete(self) -> bool:
        return self._edges is None

    @property
    def edges(self) -> np.ndarray | None:
        """Canonical (E, 2) edge array in edge mode, ``None`` in full mode."""
        return self._edges

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays aligned with the pair axis of the energy arrays."""
        return self._pi, self._pj

    def pair_id(self, i: int, j: int) -> int:
        """Array index of pair (i, j), or -1 if the pair is not stored."""
        i, j = canonical(i, j)
        if not (0 <= i and j < self.n_points):
            raise IndexError(f"pair ({i}, {j}) out of range for n={self.n_points}")
        if self._edges is None:
            return condensed_index(self.n_points, i, j)
        row = self.graph_indices[self.graph_indptr[i]:self.graph_indptr[i + 1]]
        pos = np.searchsorted(row, j)
        if pos < row.shape[0] and row[pos] == j:
            return int(self.graph_edge_ids[self.graph_indptr[i] + pos])
        return -1

    def has_pair(self, i: int, j: int) -> bool:
        return self.pair_id(i, j) >= 0

    def _require(self, i: int, j: int) -> int:
        p = self.pair_id(i, j)
        if p < 0:
            raise KeyError(f"pair ({i}, {j}) is not in the table")
        return p

    def pairs(self) -> Iterator[tuple[int, int]]:
        """All stored canonical pair keys, in array order."""
        for a, b in zip(self._pi, self._pj):
            yield int(a), int(b)

    # -- per-pair access -------------------------------------------------

    def unary(self, i: int, j: int) -> EnergyPair:
        p = self._require(i, j)
        return EnergyPair(float(self.unary0[p]), float(self.unary1[p]))

    def set_unary(self, i: int, j: int, e0: float, e1: float) -> None:
        p = self._require(i, j)
        self.unary0[p] = e0
        self.unary1[p] = e1

    def message(self, i: int, j: int) -> EnergyPair:
        p = self._require(i, j)
        return EnergyPair(float(self.msg0[p]), float(self.msg1[p]))

    def pair_state(self, i: int, j: int) -> int:
        return int(self.state[self._require(i, j)])

    def linked_pairs(self) -> np.ndarray:
        """Pair ids currently in state 1."""
        return np.nonzero(self.state)[0]


@dataclass(frozen=True)
class Partition:
    """Final clustering: per-point labels plus cluster census.

    Labels are contiguous integers starting at 0, ordered by each cluster's
    smallest member index, so equal clusterings compare equal elementwise.
    """

    labels: np.ndarray
    num_clusters: int
    num_nonsingleton: int

    @classmethod
    def from_labels(cls, raw: np.ndarray) -> "Partition":
        raw = np.asarray(raw)
        if raw.ndim != 1 or raw.shape[0] == 0:
            raise ValueError("labels must be a non-empty 1-d array")
        uniques, first_pos, inverse = np.unique(
            raw, return_index=True, return_inverse=True
        )
        # Renumber by first occurrence so cluster ids follow smallest member.
        rank = np.empty(uniques.shape[0], dtype=np.int64)
        rank[np.argsort(first_pos, kind="stable")] = np.arange(uniques.shape[0])
        labels = rank[inverse]
        counts = np.bincount(labels)
        return cls(
            labels=labels,
            num_clusters=int(counts.shape[0]),
            num_nonsingleton=int(np.count_nonzero(counts >= 2)),
        )

    def induced_state(self, i: int, j: int) -> int:
        i, j = canonical(i, j)
        return int(self.labels[i] == self.labels[j])

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.labels)


def partition_from_adjacency(table: PairTable) -> Partition:
    """Union-find closure over all state-1 pairs (the transitive merge).

    Every point takes the label of its connected component; isolated points
    become singleton clusters.
    """
    linked = table.linked_pairs()
    pi, pj = table.endpoints()
    roots = union_find_roots(table.n_points, pi[linked], pj[linked])
    return Partition.from_labels(roots)


def partition_to_states(partition: Partition, table: PairTable) -> np.ndarray:
    """Adjacency states induced by a partition on the table's pair set."""
    pi, pj = table.endpoints()
    return (partition.labels[pi] == partition.labels[pj]).astype(np.uint8)
