"""Clustering agreement metrics: accuracy, NMI, ARI.

All three are permutation-invariant: they compare partitions, not label
values. Accuracy finds the best one-to-one cluster/class matching with the
Hungarian algorithm; NMI uses natural-log mutual information normalized by
sqrt(H_pred * H_true); ARI is the standard pair-counting index adjusted for
chance under the permutation model.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def contingency_table(pred, truth):
    """Counts[i, j] = number of samples with pred == i-th pred label and
    truth == j-th truth label (labels in sorted order)."""
    pred, truth = _check_pair(pred, truth)
    pred_ids, pred_inv = np.unique(pred, return_inverse=True)
    truth_ids, truth_inv = np.unique(truth, return_inverse=True)
    counts = np.zeros((len(pred_ids), len(truth_ids)), dtype=np.int64)
    np.add.at(counts, (pred_inv, truth_inv), 1)
    return counts


def hungarian(cost):
    """Minimum-cost one-to-one assignment on a square cost matrix.

    Returns (rows, cols) index arrays such that cost[rows, cols].sum() is
    minimal over all permutations.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    return linear_sum_assignment(cost)


def clustering_accuracy(pred, truth):
    """Fraction of samples correct under the best cluster-to-class matching."""
    pred, truth = _check_pair(pred, truth)
    counts = contingency_table(pred, truth)
    side = max(counts.shape)
    padded = np.zeros((side, side), dtype=np.float64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    rows, cols = hungarian(-padded)
    return float(padded[rows, cols].sum()) / pred.size


def nmi(pred, truth):
    """Normalized mutual information, I / sqrt(H_pred * H_truth), natural logs.

    Degenerate cases: 1.0 when both labelings are single-cluster (identical
    partitions), 0.0 when exactly one of them is (no information shared).
    """
    pred, truth = _check_pair(pred, truth)
    counts = contingency_table(pred, truth).astype(np.float64)
    n = pred.size
    pij = counts / n
    # marginals from the integer counts: summing pij floats leaves dust that
    # makes single-cluster entropies slightly nonzero
    pi = counts.sum(axis=1) / n
    pj = counts.sum(axis=0) / n
    h_pred = _entropy(pi)
    h_truth = _entropy(pj)
    if h_pred == 0.0 and h_truth == 0.0:
        return 1.0
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    outer = pi[:, None] * pj[None, :]
    nz = pij > 0
    mi = float(np.sum(pij[nz] * (np.log(pij[nz]) - np.log(outer[nz]))))
    mi = max(mi, 0.0)  # guard tiny negative rounding
    return float(mi / np.sqrt(h_pred * h_truth))


def ari(pred, truth):
    """Adjusted Rand index (pair-counting, adjusted for chance).

    When the adjustment denominator is zero (both partitions trivial, e.g.
    all-singletons vs all-singletons) the index is 1.0 if the partitions
    agree on every pair and 0.0 otherwise.
    """
    pred, truth = _check_pair(pred, truth)
    counts = contingency_table(pred, truth)
    n = pred.size
    sum_ij = _pairs(counts).sum()
    a = _pairs(counts.sum(axis=1)).sum()
    b = _pairs(counts.sum(axis=0)).sum()
    total = _pairs(np.array([n]))[0]
    expected = a * b / total if total > 0 else 0.0
    max_index = (a + b) / 2.0
    denom = max_index - expected
    if denom == 0.0:
        return 1.0 if sum_ij == max_index else 0.0
    return float((sum_ij - expected) / denom)


def evaluate_clustering(pred, truth):
    """All three metrics as a dict with keys acc, nmi, ari."""
    return {
        "acc": clustering_accuracy(pred, truth),
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
    }


def _check_pair(pred, truth):
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if pred.shape != truth.shape:
        raise ValueError(
            f"label arrays differ in length: {pred.shape} vs {truth.shape}"
        )
    if pred.size == 0:
        raise ValueError("label arrays are empty")
    return pred, truth


def _as_labels(x):
    labels = getattr(x, "labels", x)  # accept ClusterLabeling
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
    return labels.astype(np.int64)


def _entropy(p):
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def _pairs(counts):
    counts = counts.astype(np.float64)
    return counts * (counts - 1.0) / 2.0
