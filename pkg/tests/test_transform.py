"""Tests for relative abundance and the modified centered-log-ratio transform."""

import numpy as np
import pytest

from taxsbm.ingest import AbundanceMatrix
from taxsbm.transform import (
    CompositionMatrix,
    geometric_mean_nonzero,
    mclr,
    relative_abundance,
)

LOG2 = np.log(2.0)


def composition(rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return CompositionMatrix(
        samples=tuple(f"s{i}" for i in range(rows.shape[0])),
        taxa=tuple(f"t{j}" for j in range(rows.shape[1])),
        values=rows,
    )


def random_compositions(n, p, zero_fraction, seed):
    rng = np.random.default_rng(seed)
    raw = rng.gamma(2.0, size=(n, p))
    mask = rng.random((n, p)) < zero_fraction
    # keep at least one positive entry per row
    mask[np.arange(n), rng.integers(0, p, size=n)] = False
    raw[mask] = 0.0
    return composition(raw / raw.sum(axis=1, keepdims=True))


class TestRelativeAbundance:
    def test_simple_rows(self):
        mat = AbundanceMatrix(
            samples=("s1", "s2"),
            taxa=("a", "b", "c"),
            counts=np.array([[2, 2, 0], [8, 2, 0]]),
        )
        comp = relative_abundance(mat)
        np.testing.assert_allclose(comp.values, [[0.5, 0.5, 0.0], [0.8, 0.2, 0.0]])

    def test_single_taxon(self):
        mat = AbundanceMatrix(samples=("s1",), taxa=("a",), counts=np.array([[5]]))
        np.testing.assert_allclose(relative_abundance(mat).values, [[1.0]])


class TestGeometricMeanNonzero:
    def test_equal_entries(self):
        assert geometric_mean_nonzero([0.5, 0.5, 0.0]) == pytest.approx(0.5)

    def test_unequal_entries(self):
        # sqrt(0.8 * 0.2) = 0.4
        assert geometric_mean_nonzero([0.8, 0.2, 0.0]) == pytest.approx(0.4)

    def test_single_entry(self):
        assert geometric_mean_nonzero([1.0]) == pytest.approx(1.0)

    def test_all_zero_raises(self):
        with pytest.raises(ValueError):
            geometric_mean_nonzero([0.0, 0.0])


class TestMclr:
    def test_shifted_equal_nonzeros(self):
        out = mclr(composition([0.5, 0.5, 0.0]), mode="shifted")
        np.testing.assert_allclose(out.values, [[1.0, 1.0, 0.0]])

    def test_robust_log_ratios(self):
        out = mclr(composition([0.8, 0.2, 0.0]), mode="robust")
        np.testing.assert_allclose(out.values, [[LOG2, -LOG2, 0.0]], atol=1e-15)

    def test_shifted_hand_computed(self):
        # log-ratios (log2, -log2); shift = 1 + log2
        out = mclr(composition([0.8, 0.2, 0.0]), mode="shifted")
        np.testing.assert_allclose(out.values, [[1.0 + 2 * LOG2, 1.0, 0.0]])
        np.testing.assert_allclose(out.shifts, [1.0 + LOG2])

    def test_single_nonzero_maps_to_shift(self):
        out = mclr(composition([0.0, 1.0, 0.0]), mode="shifted")
        np.testing.assert_allclose(out.values, [[0.0, 1.0, 0.0]])

    def test_zero_pattern_preserved(self):
        comp = random_compositions(50, 30, zero_fraction=0.5, seed=1)
        for mode in ("robust", "shifted"):
            out = mclr(comp, mode=mode)
            np.testing.assert_array_equal(out.values != 0, comp.values != 0)

    def test_robust_rows_center_to_zero(self):
        comp = random_compositions(80, 40, zero_fraction=0.6, seed=2)
        out = mclr(comp, mode="robust")
        sums = out.values.sum(axis=1)
        np.testing.assert_allclose(sums, 0.0, atol=1e-10)

    def test_shifted_floor_is_exactly_one(self):
        comp = random_compositions(60, 25, zero_fraction=0.4, seed=3)
        out = mclr(comp, mode="shifted")
        masked = np.where(comp.values > 0, out.values, np.inf)
        assert (masked.min(axis=1) == 1.0).all()
        assert (out.values[comp.values > 0] >= 1.0).all()

    def test_scale_invariance(self):
        counts = np.array([[3, 9, 0, 12], [1, 1, 5, 0]])
        mat = AbundanceMatrix(samples=("s1", "s2"), taxa=("a", "b", "c", "d"), counts=counts)
        scaled = AbundanceMatrix(
            samples=("s1", "s2"), taxa=("a", "b", "c", "d"), counts=counts * 7
        )
        one = mclr(relative_abundance(mat))
        other = mclr(relative_abundance(scaled))
        np.testing.assert_allclose(one.values, other.values, atol=1e-10)
