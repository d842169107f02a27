"""Independent brute-force oracles shared by the unit and acceptance suites.

ACC, NMI and ARI are all functions of the contingency table alone, so
enumerating every K<=3 x K<=3 table with n <= 8 points covers every labeling
pair with n <= 8, K <= 3 — the full domain, not a sample.
"""

import itertools
import math

import numpy as np


def acc_brute(pred, truth):
    """Exhaustive matching: best label permutation, tried literally."""
    pred_ids = sorted(set(pred))
    truth_ids = sorted(set(truth))
    k = max(len(pred_ids), len(truth_ids))
    best = 0
    for perm in itertools.permutations(range(k)):
        hits = 0
        for p, t in zip(pred, truth):
            pi = pred_ids.index(p)
            if pi < k and perm[pi] < len(truth_ids) and truth_ids[perm[pi]] == t:
                hits += 1
        best = max(best, hits)
    return best / len(pred)


def nmi_brute(pred, truth):
    """Direct I(pred;truth)/sqrt(H*H) with natural logs."""
    n = len(pred)
    pred_ids = sorted(set(pred))
    truth_ids = sorted(set(truth))

    def h(ids, labels):
        out = 0.0
        for c in ids:
            p = sum(1 for l in labels if l == c) / n
            if p > 0:
                out -= p * math.log(p)
        return out

    hp, ht = h(pred_ids, pred), h(truth_ids, truth)
    if hp == 0.0 and ht == 0.0:
        return 1.0 if list(pred) == list(truth) or len(set(zip(pred, truth))) == 1 else 0.0
    if hp == 0.0 or ht == 0.0:
        return 0.0
    mi = 0.0
    for a in pred_ids:
        for b in truth_ids:
            nij = sum(1 for p, t in zip(pred, truth) if p == a and t == b)
            if nij == 0:
                continue
            pa = sum(1 for p in pred if p == a)
            pb = sum(1 for t in truth if t == b)
            mi += (nij / n) * math.log(n * nij / (pa * pb))
    return mi / math.sqrt(hp * ht)


def ari_brute(pred, truth):
    """Direct pair counting over all unordered point pairs."""
    n = len(pred)
    a = b = c = d = 0  # same-same, same-diff, diff-same, diff-diff
    for i in range(n):
        for j in range(i + 1, n):
            sp = pred[i] == pred[j]
            st = truth[i] == truth[j]
            if sp and st:
                a += 1
            elif sp:
                b += 1
            elif st:
                c += 1
            else:
                d += 1
    total = a + b + c + d
    if total == 0:
        return 1.0
    expected = (a + b) * (a + c) / total
    max_index = ((a + b) + (a + c)) / 2.0
    if max_index == expected:
        return 1.0 if b == 0 and c == 0 else 0.0
    return (a - expected) / (max_index - expected)


def tables_up_to(n_max, k):
    """All k x k nonnegative integer matrices with 1 <= sum <= n_max."""
    cells = k * k
    for n in range(1, n_max + 1):
        # compositions of n into k*k ordered nonnegative parts
        for bars in itertools.combinations(range(n + cells - 1), cells - 1):
            counts = []
            prev = -1
            for b in bars:
                counts.append(b - prev - 1)
                prev = b
            counts.append(n + cells - 2 - prev)
            yield np.array(counts).reshape(k, k)


def realize(table):
    """Turn a contingency table into one labeling pair that produces it."""
    pred, truth = [], []
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            pred.extend([i] * table[i, j])
            truth.extend([j] * table[i, j])
    return pred, truth
