"""A tour of the external clustering metrics and their edge cases.

ACC finds the best one-to-one label matching (Hungarian assignment), NMI is
mutual information normalized by sqrt(H*H), ARI is chance-adjusted pair
counting. All three are invariant to relabeling; they differ in how they
punish splits, merges, and degenerate clusterings.

Run:  python3 demos/04_metrics_tour.py
"""

import numpy as np

from dmsc.metrics import contingency_table, evaluate_clustering, hungarian


def show(title, pred, truth):
    scores = evaluate_clustering(pred, truth)
    print(f"{title:<38} ACC {scores['acc']:.3f}  NMI {scores['nmi']:.3f}  "
          f"ARI {scores['ari']:.3f}")


def main():
    truth = [0, 0, 0, 0, 1, 1, 1, 1]

    show("perfect agreement", [0, 0, 0, 0, 1, 1, 1, 1], truth)
    show("same partition, relabeled", [7, 7, 7, 7, 2, 2, 2, 2], truth)
    show("one point swapped", [0, 0, 0, 1, 0, 1, 1, 1], truth)
    show("one cluster split in two", [0, 0, 2, 2, 1, 1, 1, 1], truth)
    show("everything in one cluster", [0] * 8, truth)
    show("random-ish labels", [0, 1, 0, 1, 0, 1, 0, 1], truth)

    # degenerate-by-design: a single-cluster truth agrees with itself
    show("both single-cluster", [3] * 6, [5] * 6)

    print("\ncontingency table for the split case:")
    print(contingency_table([0, 0, 2, 2, 1, 1, 1, 1], truth))

    print("\nhungarian on a cost matrix (row assignments minimize total):")
    cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    rows, cols = hungarian(cost)
    print(cost)
    print(f"assignment: {list(zip(rows.tolist(), cols.tolist()))}, "
          f"total {cost[rows, cols].sum():.0f}")


if __name__ == "__main__":
    main()
