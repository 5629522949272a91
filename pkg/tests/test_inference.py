"""Tests for posterior summaries, BIC, and community-count selection."""

import numpy as np
import pytest

from taxsbm.errors import ValidationError
from taxsbm.inference import (
    bic,
    elbow_index,
    map_labels,
    posterior_mean_omega,
    select_k,
    summarize,
)
from taxsbm.ingest import BinaryNetwork
from taxsbm.metrics import ari
from taxsbm.sbm import (
    ChainTrace,
    CommunityAssignment,
    EdgeProbabilityMatrix,
    SamplerConfig,
    gibbs_run,
)
from taxsbm.simgen import sample_network


def synthetic_trace(z_rows, omega_stack, log_joint, k):
    cfg = SamplerConfig(k=k, iterations=2 * len(log_joint), seed=0)
    return ChainTrace(
        z_samples=np.asarray(z_rows),
        omega_samples=np.asarray(omega_stack),
        log_joint=np.asarray(log_joint, dtype=float),
        config=cfg,
        labels=tuple(f"n{i}" for i in range(np.asarray(z_rows).shape[1])),
    )


class TestPosteriorMeanOmega:
    def test_identical_samples(self):
        w = np.array([[0.4, 0.1], [0.1, 0.7]])
        trace = synthetic_trace(
            [[1, 2], [1, 2]], [w, w], [-1.0, -2.0], k=2
        )
        np.testing.assert_allclose(posterior_mean_omega(trace).values, w)

    def test_two_sample_average(self):
        w1 = np.full((1, 1), 0.2)
        w2 = np.full((1, 1), 0.4)
        trace = synthetic_trace([[1], [1]], [w1, w2], [-1.0, -1.0], k=1)
        assert posterior_mean_omega(trace).values[0, 0] == pytest.approx(0.3)

    def test_fixed_counts_posterior_mean(self):
        # repeated conjugate draws for fixed counts: mean near (M+a)/(N+a+b)
        from taxsbm.sbm import BlockCounts, sample_omega

        counts = BlockCounts(observed=np.array([[7]]), possible=np.array([[20]]))
        cfg = SamplerConfig(k=1, iterations=10, seed=0)
        rng = np.random.default_rng(8)
        draws = np.array(
            [sample_omega(counts, cfg, rng).values[0, 0] for _ in range(10000)]
        )
        expected = 8 / 22
        se = draws.std() / np.sqrt(draws.size)
        assert draws.mean() == pytest.approx(expected, abs=3 * se)

    def test_bounds_and_symmetry(self):
        g = BinaryNetwork.empty(tuple("abcdef"))
        trace = gibbs_run(g, None, SamplerConfig(k=2, iterations=100, seed=3))
        mean = posterior_mean_omega(trace)
        assert (mean.values >= 0).all() and (mean.values <= 1).all()
        np.testing.assert_allclose(mean.values, mean.values.T)


class TestMapLabels:
    def test_single_sample(self):
        w = np.full((1, 1), 0.5)
        trace = synthetic_trace([[1, 1]], [w], [-3.0], k=1)
        z, value = map_labels(trace)
        np.testing.assert_array_equal(z.labels, [1, 1])
        assert value == -3.0

    def test_tie_break_earliest(self):
        w = np.full((1, 1), 0.5)
        trace = synthetic_trace(
            [[1], [1], [1]], [w, w, w], [-10.0, -5.0, -5.0], k=1
        )
        idx = int(np.argmax(trace.log_joint))
        assert idx == 1  # first of the tied maxima
        _, value = map_labels(trace)
        assert value == -5.0


class TestBic:
    def test_nu_for_k7(self):
        assert bic(0.0, k=7, p=99) == pytest.approx(29 * np.log(99))

    def test_k1_p1(self):
        assert bic(-4.5, k=1, p=1) == pytest.approx(9.0)

    def test_hand_computed(self):
        assert bic(-1000.0, k=7, p=99) == pytest.approx(2133.2584756539, abs=1e-9)

    def test_increasing_in_nu(self):
        values = [bic(-100.0, k=k, p=50) for k in range(1, 8)]
        assert all(b2 > b1 for b1, b2 in zip(values, values[1:]))


class TestElbowIndex:
    def test_clean_elbow(self):
        grid = range(2, 9)
        bics = [1000, 700, 500, 420, 410, 405, 400]
        assert elbow_index(grid, bics) == 2  # k=4, furthest below the chord

    def test_concave_curve_falls_back_to_min(self):
        grid = range(2, 6)
        bics = [100, 250, 350, 400]  # concave increasing: never below chord
        assert elbow_index(grid, bics) == 0

    def test_short_grid(self):
        assert elbow_index([2, 3], [5.0, 4.0]) == 1


@pytest.fixture(scope="module")
def planted_three():
    rng = np.random.default_rng(9)
    z = CommunityAssignment(labels=np.repeat([1, 2, 3], 15), k=3)
    w = np.full((3, 3), 0.05)
    np.fill_diagonal(w, 0.9)
    return sample_network(z, EdgeProbabilityMatrix(values=w), rng), z


class TestSelectK:
    def test_recovers_planted_k(self, planted_three):
        g, z = planted_three
        base = SamplerConfig(k=3, f=0.0, iterations=600, seed=17)
        selection = select_k(g, None, base, range(2, 7))
        assert selection.chosen_k == 3
        assert [k for k, _ in selection.bic_curve] == [2, 3, 4, 5, 6]
        fit = selection.chosen_fit()
        assert ari(fit.z_map.labels, z.labels) == 1.0

    def test_deterministic(self, planted_three):
        g, _ = planted_three
        base = SamplerConfig(k=3, f=0.0, iterations=200, seed=21)
        one = select_k(g, None, base, [2, 3, 4])
        two = select_k(g, None, base, [2, 3, 4])
        assert one.bic_curve == two.bic_curve
        assert one.chosen_k == two.chosen_k

    def test_grid_validation(self, planted_three):
        g, _ = planted_three
        base = SamplerConfig(k=3, f=0.0, iterations=100, seed=1)
        with pytest.raises(ValidationError):
            select_k(g, None, base, [])
        with pytest.raises(ValidationError):
            select_k(g, None, base, [3, 2])
        with pytest.raises(ValidationError):
            select_k(g, None, base, [2, 500])

    def test_summary_consistency(self, planted_three):
        g, _ = planted_three
        trace = gibbs_run(g, None, SamplerConfig(k=3, f=0.0, iterations=400, seed=2))
        summary = summarize(trace)
        assert summary.nu == 1 + 3 * 4 // 2
        assert summary.bic == pytest.approx(
            summary.nu * np.log(g.p) - 2 * summary.map_log_joint
        )
        assert summary.map_log_joint == pytest.approx(trace.log_joint.max())
