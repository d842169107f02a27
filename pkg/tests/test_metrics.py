"""Clustering metrics against exhaustive brute-force oracles.

ACC, NMI and ARI are all functions of the contingency table alone, so
enumerating every K<=3 x K<=3 table with n <= 8 points covers every labeling
pair with n <= 8, K <= 3 — the full domain, not a sample.
"""

import itertools

import numpy as np
import pytest

from oracles import acc_brute, ari_brute, nmi_brute, realize, tables_up_to
from dmsc.metrics import (
    ari,
    clustering_accuracy,
    contingency_table,
    evaluate_clustering,
    hungarian,
    nmi,
)


def test_exhaustive_brute_force_all_tables_n_le_8():
    checked = 0
    for table in tables_up_to(8, 3):
        pred, truth = realize(table)
        assert abs(clustering_accuracy(pred, truth) - acc_brute(pred, truth)) < 1e-12
        assert abs(nmi(pred, truth) - nmi_brute(pred, truth)) < 1e-12
        assert abs(ari(pred, truth) - ari_brute(pred, truth)) < 1e-12
        checked += 1
    assert checked > 20000  # the enumeration really covered the domain


def test_hungarian_matches_enumeration_on_50_matrices():
    rng = np.random.default_rng(0)
    for trial in range(50):
        cost = rng.integers(0, 100, size=(6, 6)).astype(float)
        rows, cols = hungarian(cost)
        got = cost[rows, cols].sum()
        best = min(
            sum(cost[i, p[i]] for i in range(6))
            for p in itertools.permutations(range(6))
        )
        assert got == pytest.approx(best, abs=1e-12), trial


def test_hungarian_identity_and_singleton():
    cost = np.ones((3, 3)) - np.eye(3)
    rows, cols = hungarian(cost)
    assert np.array_equal(cols[np.argsort(rows)], np.arange(3))
    rows, cols = hungarian(np.array([[7.0]]))
    assert cost is not None and rows.tolist() == [0] and cols.tolist() == [0]


# -- targeted examples --------------------------------------------------------------


def test_perfect_agreement():
    labels = [0, 0, 1, 1, 2, 2]
    out = evaluate_clustering(labels, labels)
    assert out == {"acc": 1.0, "nmi": 1.0, "ari": 1.0}


def test_acc_hand_example():
    assert clustering_accuracy([0, 1, 1, 1], [0, 0, 1, 1]) == 0.75


def test_all_one_cluster_vs_balanced_truth():
    pred = [0, 0, 0, 0]
    truth = [0, 0, 1, 1]
    assert ari(pred, truth) == 0.0
    assert nmi(pred, truth) == 0.0
    assert clustering_accuracy(pred, truth) == 0.5


def test_both_single_cluster():
    assert nmi([3, 3, 3], [5, 5, 5]) == 1.0
    assert ari([3, 3, 3], [5, 5, 5]) == 1.0
    assert clustering_accuracy([3, 3, 3], [5, 5, 5]) == 1.0


def test_relabeling_invariance():
    rng = np.random.default_rng(1)
    for trial in range(20):
        n = int(rng.integers(4, 30))
        pred = rng.integers(0, 4, size=n)
        truth = rng.integers(0, 3, size=n)
        remap = rng.permutation(4)
        pred2 = remap[pred]
        assert clustering_accuracy(pred, truth) == pytest.approx(
            clustering_accuracy(pred2, truth), abs=1e-12
        )
        assert nmi(pred, truth) == pytest.approx(nmi(pred2, truth), abs=1e-12)
        assert ari(pred, truth) == pytest.approx(ari(pred2, truth), abs=1e-12)


def test_symmetry():
    rng = np.random.default_rng(2)
    for trial in range(10):
        pred = rng.integers(0, 3, size=15)
        truth = rng.integers(0, 3, size=15)
        assert nmi(pred, truth) == pytest.approx(nmi(truth, pred), abs=1e-12)
        assert ari(pred, truth) == pytest.approx(ari(truth, pred), abs=1e-12)
        assert clustering_accuracy(pred, truth) == pytest.approx(
            clustering_accuracy(truth, pred), abs=1e-12
        )


def test_contingency_table_marginals():
    pred = [0, 0, 1, 2, 2, 2]
    truth = [1, 1, 0, 0, 1, 1]
    table = contingency_table(pred, truth)
    assert table.sum() == 6
    assert table.shape == (3, 2)
    assert np.array_equal(table.sum(axis=1), [2, 1, 3])  # pred marginal
    assert np.array_equal(table.sum(axis=0), [2, 4])  # truth marginal


def test_rectangular_padding_in_acc():
    # more predicted clusters than true ones and vice versa
    assert clustering_accuracy([0, 1, 2, 3], [0, 0, 1, 1]) == 0.5
    assert clustering_accuracy([0, 0, 0, 0], [0, 1, 2, 3]) == 0.25


def test_errors():
    with pytest.raises(ValueError):
        evaluate_clustering([0, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        evaluate_clustering([], [])
    with pytest.raises(ValueError):
        hungarian(np.ones((2, 3)))


def test_metrics_accept_cluster_labeling():
    from dmsc.spectral import ClusterLabeling

    lab = ClusterLabeling(np.array([0, 0, 1, 1]), 2)
    out = evaluate_clustering(lab, np.array([1, 1, 0, 0]))
    assert out["acc"] == 1.0 and out["ari"] == 1.0
