from collections import Counter
from math import comb


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings of the same items."""
    labels_a, labels_b = list(labels_a), list(labels_b)
    if len(labels_a) != len(labels_b):
        raise ValueError("labelings differ in length")
    n = len(labels_a)
    pairs = sum(comb(v, 2) for v in Counter(zip(labels_a, labels_b)).values())
    rows = sum(comb(v, 2) for v in Counter(labels_a).values())
    cols = sum(comb(v, 2) for v in Counter(labels_b).values())
    total = comb(n, 2)
    if total == 0:
        return 1.0
    expected = rows * cols / total
    best = (rows + cols) / 2
    if best == expected:
        return 1.0
    return (pairs - expected) / (best - expected)
