"""Clustering evaluation: pairwise and per-point (BCubed) precision/recall/F.

Both measures compare predicted cluster labels against ground-truth class
labels. Points with a negative truth label are distractors and are excluded
from every sum, including cluster sizes. Counting goes through a
cluster-by-class contingency table, never through explicit pair enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f_score: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRF":
        denom = precision + recall
        f = 2.0 * precision * recall / denom if denom > 0.0 else 0.0
        return cls(precision, recall, f)


@dataclass(frozen=True)
class _Contingency:
    """Nonzero cluster-by-class cell counts over the labeled points."""

    cell_counts: np.ndarray    # count per nonzero cell
    cell_cluster: np.ndarray   # compact cluster id per cell
    cell_class: np.ndarray     # compact class id per cell
    cluster_sizes: np.ndarray  # labeled members per cluster
    class_sizes: np.ndarray    # members per class
    n_labeled: int


def _contingency(pred: np.ndarray, truth: np.ndarray) -> _Contingency:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("pred and truth must be 1-d arrays of equal length")
    keep = truth >= 0
    if not np.any(keep):
        raise ValueError("no labeled points (all truth labels negative)")
    pred = pred[keep]
    truth = truth[keep]
    _, pred_ids = np.unique(pred, return_inverse=True)
    _, truth_ids = np.unique(truth, return_inverse=True)
    n_classes = int(truth_ids.max()) + 1
    keys, counts = np.unique(pred_ids * n_classes + truth_ids, return_counts=True)
    return _Contingency(
        cell_counts=counts.astype(np.float64),
        cell_cluster=keys // n_classes,
        cell_class=keys % n_classes,
        cluster_sizes=np.bincount(pred_ids).astype(np.float64),
        class_sizes=np.bincount(truth_ids).astype(np.float64),
        n_labeled=int(pred.shape[0]),
    )


def _pairs(counts: np.ndarray) -> float:
    return float((counts * (counts - 1.0) / 2.0).sum())


def pairwise_prf(pred: np.ndarray, truth: np.ndarray) -> PRF:
    """Precision/recall/F over all labeled point pairs.

    A pair counts as a true positive when it shares both class and cluster;
    zero denominators yield a metric of 0.
    """
    c = _contingency(pred, truth)
    tp = _pairs(c.cell_counts)
    tp_fp = _pairs(c.cluster_sizes)
    tp_fn = _pairs(c.class_sizes)
    precision = tp / tp_fp if tp_fp > 0.0 else 0.0
    recall = tp / tp_fn if tp_fn > 0.0 else 0.0
    return PRF.from_pr(precision, recall)


def bcubed_prf(pred: np.ndarray, truth: np.ndarray) -> PRF:
    """Per-point precision (cluster purity) and recall (class coverage).

    Each point also counts itself, so both sums include the self pair; sizes
    count labeled members only.
    """
    c = _contingency(pred, truth)
    sq = c.cell_counts * c.cell_counts
    precision = float((sq / c.cluster_sizes[c.cell_cluster]).sum() / c.n_labeled)
    recall = float((sq / c.class_sizes[c.cell_class]).sum() / c.n_labeled)
    return PRF.from_pr(precision, recall)
