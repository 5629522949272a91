"""Tests for rank correlation, FDR adjustment, and network construction."""

import numpy as np
import pytest

from taxsbm.errors import UndefinedCorrelationError, ValidationError
from taxsbm.ingest import TaxonomyMap
from taxsbm.network import (
    bh_adjust,
    build_cooccurrence,
    build_tree_adjacency,
    spearman_pvalue,
    spearman_rho,
    write_correlations,
)
from taxsbm.transform import TransformedMatrix


def transformed(values, seed_labels="t"):
    values = np.asarray(values, dtype=float)
    return TransformedMatrix(
        samples=tuple(f"s{i}" for i in range(values.shape[0])),
        taxa=tuple(f"{seed_labels}{j}" for j in range(values.shape[1])),
        values=values,
        shift_mode="robust",
        shifts=np.zeros(values.shape[0]),
    )


class TestSpearmanRho:
    def test_monotone_increasing(self):
        assert spearman_rho([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_monotone_decreasing(self):
        assert spearman_rho([1, 2, 3], [30, 20, 10]) == pytest.approx(-1.0)

    def test_hand_ranked_value(self):
        # ranks equal the values; Pearson of (1,2,3,4) vs (2,1,4,3) = 0.6
        assert spearman_rho([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)

    def test_constant_vector_is_undefined(self):
        with pytest.raises(UndefinedCorrelationError):
            spearman_rho([1, 1, 1], [1, 2, 3])

    def test_symmetry_and_monotone_invariance(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal(25)
        b = rng.standard_normal(25)
        assert spearman_rho(a, b) == pytest.approx(spearman_rho(b, a))
        assert spearman_rho(np.exp(a), b) == pytest.approx(spearman_rho(a, b))
        assert spearman_rho(a, 3 * b + 1) == pytest.approx(spearman_rho(a, b))


class TestSpearmanPvalue:
    def test_zero_rho(self):
        assert spearman_pvalue(0.0, 15) == pytest.approx(1.0)

    def test_perfect_rho(self):
        assert spearman_pvalue(1.0, 10) == 0.0

    def test_reference_value(self):
        # t = 0.5*sqrt(18/0.75) = 2.4495 with 18 df; two-sided tail mass was
        # frozen from numerical quadrature of the t density
        assert spearman_pvalue(0.5, 20) == pytest.approx(0.0247695588, abs=1e-9)

    def test_small_n_rejected(self):
        with pytest.raises(ValidationError):
            spearman_pvalue(0.5, 2)


class TestBhAdjust:
    def test_single_value(self):
        np.testing.assert_allclose(bh_adjust([0.05]), [0.05])

    def test_step_up_hand_computed(self):
        np.testing.assert_allclose(bh_adjust([0.01, 0.02, 0.03]), [0.03, 0.03, 0.03])

    def test_equal_values_unchanged(self):
        np.testing.assert_allclose(bh_adjust([0.5, 0.5, 0.5]), [0.5, 0.5, 0.5])

    def test_never_below_input(self):
        rng = np.random.default_rng(11)
        p = rng.random(200)
        q = bh_adjust(p)
        assert (q >= p - 1e-15).all()
        assert (q <= 1.0).all()

    def test_monotone(self):
        rng = np.random.default_rng(12)
        p = rng.random(100)
        q = bh_adjust(p)
        order = np.argsort(p)
        assert (np.diff(q[order]) >= -1e-15).all()


class TestBuildCooccurrence:
    def test_perfect_pair_gets_edge(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(30)
        noise = rng.standard_normal((30, 3))
        values = np.column_stack([x, np.exp(x), noise])
        g, result = build_cooccurrence(transformed(values), alpha=0.05)
        assert g.adjacency[0, 1] == 1

    def test_independent_noise_yields_sparse_network(self):
        rng = np.random.default_rng(31)
        values = rng.standard_normal((50, 30))
        g, _ = build_cooccurrence(transformed(values), alpha=0.05)
        n_pairs = 30 * 29 / 2
        assert g.n_edges / n_pairs < 0.05

    def test_constant_column_is_isolated(self):
        rng = np.random.default_rng(5)
        values = rng.standard_normal((20, 4))
        values[:, 2] = 1.25
        g, result = build_cooccurrence(transformed(values), alpha=0.5)
        assert g.adjacency[2].sum() == 0
        undefined = [p for p in result.pairs if not p.defined]
        assert len(undefined) == 3
        assert all({p.taxon_a, p.taxon_b} & {"t2"} for p in undefined)

    def test_alpha_monotonicity(self):
        rng = np.random.default_rng(17)
        values = rng.standard_normal((40, 10))
        values[:, 1] = values[:, 0] + 0.5 * rng.standard_normal(40)
        g_small, _ = build_cooccurrence(transformed(values), alpha=0.01)
        g_large, _ = build_cooccurrence(transformed(values), alpha=0.2)
        assert (g_large.adjacency >= g_small.adjacency).all()

    def test_alpha_zero_gives_empty_network(self):
        rng = np.random.default_rng(19)
        values = rng.standard_normal((20, 5))
        g, _ = build_cooccurrence(transformed(values), alpha=0.0)
        assert g.n_edges == 0

    def test_adjusted_at_least_raw(self):
        rng = np.random.default_rng(23)
        values = rng.standard_normal((25, 8))
        _, result = build_cooccurrence(transformed(values), alpha=0.05)
        for pair in result.pairs:
            assert pair.adjusted_p >= pair.p_value - 1e-15

    def test_two_taxa_minimum(self):
        with pytest.raises(ValidationError):
            build_cooccurrence(transformed(np.zeros((10, 1))))

    def test_correlations_csv(self, tmp_path):
        rng = np.random.default_rng(29)
        values = rng.standard_normal((15, 4))
        _, result = build_cooccurrence(transformed(values), alpha=0.05)
        out = tmp_path / "corr.csv"
        write_correlations(result, out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "taxon_a,taxon_b,rho,p,adjusted_p,edge"
        assert len(lines) == 1 + 4 * 3 // 2


class TestBuildTreeAdjacency:
    def test_shared_parent_edges(self):
        tax = TaxonomyMap(entries={"s1": "g1", "s2": "g1", "s3": "g2"})
        q = build_tree_adjacency(tax, ["s1", "s2", "s3"])
        np.testing.assert_array_equal(q.adjacency, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])

    def test_all_distinct_parents(self):
        tax = TaxonomyMap(entries={"a": "g1", "b": "g2", "c": "g3"})
        q = build_tree_adjacency(tax, ["a", "b", "c"])
        assert q.n_edges == 0

    def test_missing_parent_is_coverage_error(self):
        tax = TaxonomyMap(entries={"a": "g1"})
        from taxsbm.errors import CoverageError

        with pytest.raises(CoverageError):
            build_tree_adjacency(tax, ["a", "b"])
