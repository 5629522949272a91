"""Tests for the evaluation metrics."""

import numpy as np
import pytest

from taxsbm.ingest import BinaryNetwork
from taxsbm.metrics import ari, genus_community_strength, nodal_strength, shannon

LOG2 = np.log(2.0)

Z10 = np.array([1, 1, 1, 1, 1, 2, 2, 2, 2, 2])
TAU_WEAK = np.array([15, 10, 17, 6, 11, 9, 25, 29, 3, 1])
TAU_MODERATE = np.array([15, 15, 15, 15, 15, 3, 4, 26, 7, 8])
TAU_STRONG = np.array([15, 15, 15, 15, 15, 8, 8, 8, 8, 8])


def star(p):
    adj = np.zeros((p, p), np.int8)
    adj[0, 1:] = 1
    adj[1:, 0] = 1
    return BinaryNetwork(labels=tuple(f"n{i}" for i in range(p)), adjacency=adj)


def complete(p):
    adj = np.ones((p, p), np.int8)
    np.fill_diagonal(adj, 0)
    return BinaryNetwork(labels=tuple(f"n{i}" for i in range(p)), adjacency=adj)


class TestAri:
    def test_identical(self):
        assert ari([1, 2, 1, 3], [1, 2, 1, 3]) == 1.0

    def test_label_permutation(self):
        assert ari([1, 1, 2, 2], [2, 2, 1, 1]) == 1.0

    def test_strength_fixtures(self):
        assert ari(Z10, TAU_WEAK) == 0.0
        assert ari(Z10, TAU_MODERATE) == pytest.approx(10 / 19)
        assert ari(Z10, TAU_STRONG) == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 4, 50)
        b = rng.integers(0, 3, 50)
        assert ari(a, b) == pytest.approx(ari(b, a))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(6)
        z = rng.integers(1, 5, 60)
        other = rng.integers(1, 4, 60)
        relabeled = np.array([5 - v for v in z])
        assert ari(z, other) == pytest.approx(ari(relabeled, other))
        assert ari(z, relabeled) == 1.0

    def test_degenerate_all_same_both(self):
        assert ari([1, 1, 1], [2, 2, 2]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ari([1, 2], [1, 2, 3])


class TestNodalStrength:
    def test_star(self):
        d = nodal_strength(star(6))
        assert d[0] == 5
        assert (d[1:] == 1).all()

    def test_empty(self):
        g = BinaryNetwork.empty(("a", "b", "c"))
        assert (nodal_strength(g) == 0).all()

    def test_complete(self):
        assert (nodal_strength(complete(4)) == 3).all()

    def test_degree_sum_is_twice_edges(self):
        rng = np.random.default_rng(8)
        adj = np.triu((rng.random((15, 15)) < 0.3).astype(np.int8), 1)
        adj = adj + adj.T
        g = BinaryNetwork(labels=tuple(f"n{i}" for i in range(15)), adjacency=adj)
        assert nodal_strength(g).sum() == 2 * g.n_edges


class TestGenusCommunityStrength:
    def test_single_group(self):
        g = complete(4)
        rows = genus_community_strength(g, [1, 1, 1, 1], ["g1"] * 4)
        assert rows == [(1, "g1", 12)]

    def test_split_partitions_total(self):
        g = complete(4)
        rows = genus_community_strength(g, [1, 1, 2, 2], ["g1"] * 4)
        assert rows == [(1, "g1", 6), (2, "g1", 6)]
        assert sum(r[2] for r in rows) == int(nodal_strength(g).sum())

    def test_within_community_totals(self):
        rng = np.random.default_rng(9)
        adj = np.triu((rng.random((12, 12)) < 0.4).astype(np.int8), 1)
        adj = adj + adj.T
        g = BinaryNetwork(labels=tuple(f"n{i}" for i in range(12)), adjacency=adj)
        z = rng.integers(1, 4, 12)
        tau = rng.integers(1, 5, 12)
        rows = genus_community_strength(g, z, tau)
        degrees = nodal_strength(g)
        for k in np.unique(z):
            total = sum(r[2] for r in rows if r[0] == k)
            assert total == int(degrees[z == k].sum())


class TestShannon:
    def test_single_genus_zero(self):
        assert shannon([1, 1, 1], ["g1", "g1", "g1"], 1) == 0.0

    def test_two_equal_genera(self):
        assert shannon([1, 1], ["g1", "g2"], 1) == pytest.approx(LOG2)

    def test_hand_computed_mixture(self):
        # proportions (0.5, 0.25, 0.25) -> 1.5 * log 2
        z = [1, 1, 1, 1]
        tau = ["a", "a", "b", "c"]
        assert shannon(z, tau, 1) == pytest.approx(1.5 * LOG2)

    def test_uniform_maximizes(self):
        z = [1] * 6
        tau = ["a", "a", "b", "b", "c", "c"]
        assert shannon(z, tau, 1) == pytest.approx(np.log(3))

    def test_empty_community_raises(self):
        with pytest.raises(ValueError):
            shannon([1, 1], ["a", "b"], 2)
