import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chronomap.errors import ConfigError
from chronomap.superclass import (
    SuperclassPartition,
    contiguity_check,
    cut_by_variance,
    cut_to_k,
    explained_variance,
    individual_explained_variance,
    superclass_label,
    ward_cluster_codebook,
)


def weighted_inertia(X, w, idx):
    """Direct inertia of the points ``idx`` about their own weighted mean."""
    idx = list(idx)
    m = (w[idx, None] * X[idx]).sum(axis=0) / w[idx].sum()
    return float((w[idx] * ((X[idx] - m) ** 2).sum(axis=1)).sum())


def brute_ratio(X, w, groups):
    total = weighted_inertia(X, w, range(len(X)))
    within = sum(weighted_inertia(X, w, g) for g in groups)
    return 1.0 - within / total


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


class TestWard:
    def test_two_units(self):
        X = np.array([[0.0, 0.0], [3.0, 4.0]])
        d = ward_cluster_codebook(X, [1, 1])
        assert len(d.merges) == 1
        assert d.merges[0].cost == pytest.approx(25 / 2, rel=1e-15)

    def test_identical_vectors(self):
        d = ward_cluster_codebook(np.ones((3, 4)), [2, 1, 5])
        assert [m.cost for m in d.merges] == [0.0, 0.0]

    def test_line_0_1_10_11(self):
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        d = ward_cluster_codebook(X, [1, 1, 1, 1])
        first_two = [set(d.members(c)) for m in d.merges[:2] for c in (m.left, m.right)]
        merged = [set(d.members(m.left)) | set(d.members(m.right)) for m in d.merges[:2]]
        assert merged == [{0, 1}, {2, 3}]
        assert all(len(s) == 1 for s in first_two)
        # exhaustive: {0,1} and {10,11} are the cheapest pairs of all six
        costs = {(i, j): 0.5 * (X[i, 0] - X[j, 0]) ** 2 for i, j in itertools.combinations(range(4), 2)}
        assert sorted(costs, key=costs.get)[:2] == [(0, 1), (2, 3)]

    def test_tie_break_smallest_pair(self):
        X = np.array([[0.0], [1.0], [2.0]])
        d = ward_cluster_codebook(X, [1, 1, 1])
        assert (d.merges[0].left, d.merges[0].right) == (0, 1)

    def test_empty_units_dropped(self):
        X = np.arange(8, dtype=float).reshape(4, 2)
        d = ward_cluster_codebook(X, [3, 0, 2, 0])
        assert d.leaf_units == [0, 2] and d.dropped_units == [1, 3]
        with pytest.raises(ConfigError):
            ward_cluster_codebook(X, [0, 0, 0, 0])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 2**31))
    def test_greedy_step_is_exhaustive_minimum(self, n, seed):
        rng = np.random.default_rng(seed)
        X = rng.random((n, 3))
        w = rng.integers(1, 20, n).astype(float)
        d = ward_cluster_codebook(X, w)
        clusters = {i: [i] for i in range(n)}
        for s, m in enumerate(d.merges):
            increments = {}
            for a, b in itertools.combinations(sorted(clusters), 2):
                union = clusters[a] + clusters[b]
                increments[(a, b)] = (weighted_inertia(X, w, union) - weighted_inertia(X, w, clusters[a])
                                      - weighted_inertia(X, w, clusters[b]))
            best = min(increments.values())
            assert m.cost == pytest.approx(best, rel=1e-9, abs=1e-12)
            assert increments[(m.left, m.right)] == pytest.approx(best, rel=1e-9, abs=1e-12)
            clusters[n + s] = clusters.pop(m.left) + clusters.pop(m.right)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 2**31))
    def test_costs_sum_to_total_inertia(self, n, seed):
        rng = np.random.default_rng(seed)
        X = rng.random((n, 5))
        w = rng.integers(1, 50, n).astype(float)
        d = ward_cluster_codebook(X, w)
        total = weighted_inertia(X, w, range(n))
        assert sum(m.cost for m in d.merges) == pytest.approx(total, rel=1e-9)

    @pytest.mark.parametrize("linkage", ["single", "complete"])
    def test_other_linkages_run(self, linkage):
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        d = ward_cluster_codebook(X, [1, 1, 1, 1], linkage)
        assert len(d.merges) == 3
        assert d.merges[0].cost == pytest.approx(1.0)


class TestCut:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.X = rng.random((10, 6))
        self.w = rng.integers(1, 30, 10).astype(float)
        self.d = ward_cluster_codebook(self.X, self.w)

    def test_extremes_exact(self):
        assert cut_to_k(self.d, 10, self.X, self.w).explained_variance == 1.0
        assert cut_to_k(self.d, 1, self.X, self.w).explained_variance == 0.0

    def test_out_of_range(self):
        for k in (0, 11):
            with pytest.raises(ConfigError):
                cut_to_k(self.d, k)

    def test_labels_ordered_by_smallest_unit(self):
        part = cut_to_k(self.d, 4, self.X, self.w)
        groups = part.groups()
        assert list(groups) == ["A", "B", "C", "D"]
        firsts = [min(g) for g in groups.values()]
        assert firsts == sorted(firsts) and firsts[0] == 0

    def test_monotone_in_k(self):
        ev = [cut_to_k(self.d, k, self.X, self.w).explained_variance for k in range(1, 11)]
        assert all(b >= a - 1e-15 for a, b in zip(ev, ev[1:]))

    def test_variance_from_merge_costs(self):
        total = sum(m.cost for m in self.d.merges)
        for k in range(1, 11):
            within = sum(m.cost for m in self.d.merges[: 10 - k])
            ev = cut_to_k(self.d, k, self.X, self.w).explained_variance
            assert ev == pytest.approx(1 - within / total, abs=1e-12)

    def test_cut_by_variance_picks_smallest_k(self):
        part = cut_by_variance(self.d, 0.8, self.X, self.w)
        below = cut_to_k(self.d, part.k - 1, self.X, self.w)
        assert part.explained_variance >= 0.8 > below.explained_variance


class TestExplainedVariance:
    def test_singletons_and_one_group(self, rng):
        X, w = rng.random((5, 3)), np.ones(5)
        single = SuperclassPartition({i: superclass_label(i) for i in range(5)}, 5, np.nan)
        one = SuperclassPartition({i: "A" for i in range(5)}, 1, np.nan)
        assert explained_variance(single, X, w) == 1.0
        assert explained_variance(one, X, w) == 0.0

    def test_all_two_partitions_of_four_points(self):
        X = np.array([[0.0, 1.0], [2.0, 0.5], [5.0, 5.0], [1.0, 7.0]])
        w = np.array([3.0, 1.0, 2.0, 5.0])
        two = [p for p in set_partitions([0, 1, 2, 3]) if len(p) == 2]
        assert len(two) == 7
        for groups in two:
            labels = {u: "AB"[i] for i, g in enumerate(groups) for u in g}
            part = SuperclassPartition(labels, 2, np.nan)
            assert explained_variance(part, X, w) == pytest.approx(brute_ratio(X, w, groups), abs=1e-12)

    def test_zero_total_inertia(self):
        part = SuperclassPartition({0: "A", 1: "B"}, 2, np.nan)
        assert explained_variance(part, np.ones((2, 3)), [1, 1]) == 1.0

    def test_individual_level(self, rng):
        X = rng.random((12, 4))
        units = np.repeat([0, 1, 2], 4)
        part = SuperclassPartition({0: "A", 1: "A", 2: "B"}, 2, np.nan)
        expected = brute_ratio(X, np.ones(12), [list(range(8)), list(range(8, 12))])
        assert individual_explained_variance(part, X, units) == pytest.approx(expected, abs=1e-12)


class TestContiguity:
    def test_contiguous(self):
        assert contiguity_check(SuperclassPartition({0: "A", 1: "A", 2: "B", 3: "B"}, 2, 1.0)) == (True, [])

    def test_interleaved(self):
        ok, bad = contiguity_check(SuperclassPartition({0: "A", 2: "A", 1: "B", 3: "B"}, 2, 1.0))
        assert not ok and bad == ["A", "B"]

    def test_pairs_of_ten(self):
        labels = {u: "ABCDE"[u // 2] for u in range(10)}
        assert contiguity_check(SuperclassPartition(labels, 5, 0.856))[0]


def test_labels_past_z():
    assert [superclass_label(i) for i in (0, 25, 26, 27)] == ["A", "Z", "AA", "AB"]
