import math

import numpy as np
import pytest

from uncmap.calibration import (
    coverage,
    coverage_arrays,
    laplace_interval,
    match_vertex_pairs,
    reliability,
)
from uncmap.geometry import ElementClass, MapElement, Pose2, VectorMap
from uncmap.probmap import (
    LaplaceParam,
    ProbMapElement,
    ProbVectorMap,
    ProbVertex,
    standardize_map,
)


class TestLaplaceInterval:
    def test_half_mass(self):
        lo, hi = laplace_interval(LaplaceParam(0.0, 1.0), 0.5)
        assert hi == pytest.approx(math.log(2), rel=1e-12)
        assert lo == pytest.approx(-math.log(2), rel=1e-12)

    def test_ninety_percent(self):
        lo, hi = laplace_interval((0.0, 1.0), 0.9)
        assert hi == pytest.approx(math.log(10), rel=1e-12)

    def test_collapses_at_tiny_level(self):
        lo, hi = laplace_interval((3.0, 2.0), 1e-12)
        assert hi - lo == pytest.approx(0.0, abs=1e-10)
        assert lo == pytest.approx(3.0, abs=1e-10)

    def test_monotone_in_level(self):
        widths = [laplace_interval((0.0, 1.0), lv)[1] for lv in
                  (0.1, 0.3, 0.5, 0.7, 0.9, 0.99)]
        assert all(a < b for a, b in zip(widths, widths[1:]))

    def test_level_out_of_range(self):
        for lv in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                laplace_interval((0.0, 1.0), lv)


class TestCoverage:
    def test_exact_locations_cover_everything(self):
        mu = np.zeros((100, 2))
        rep = coverage_arrays(mu, np.ones_like(mu), mu.copy(), [0.1, 0.5, 0.9])
        np.testing.assert_array_equal(rep.empirical_coverage, 1.0)

    def test_monte_carlo_self_calibration(self):
        rng = np.random.default_rng(0)
        n = 100_000
        mu = rng.uniform(-5, 5, (n, 2))
        b = rng.uniform(0.1, 2.0, (n, 2))
        gt = rng.laplace(mu, b)
        rep = coverage_arrays(mu, b, gt, [0.5, 0.9])
        assert rep.empirical_coverage[0] == pytest.approx(0.5, abs=0.01)
        assert rep.empirical_coverage[1] == pytest.approx(0.9, abs=0.01)
        assert rep.n == 2 * n

    def test_halved_scales_strictly_undercover(self):
        rng = np.random.default_rng(1)
        n = 20_000
        mu = np.zeros((n, 2))
        b = np.full((n, 2), 0.7)
        gt = rng.laplace(mu, b)
        full = coverage_arrays(mu, b, gt, [0.3, 0.5, 0.9])
        halved = coverage_arrays(mu, b / 2, gt, [0.3, 0.5, 0.9])
        assert np.all(halved.empirical_coverage < full.empirical_coverage)

    def test_monotone_in_level(self):
        rng = np.random.default_rng(2)
        mu = np.zeros((500, 2))
        b = np.ones((500, 2))
        gt = rng.laplace(mu, b)
        rep = coverage_arrays(mu, b, gt, [0.1, 0.4, 0.6, 0.95])
        assert np.all(np.diff(rep.empirical_coverage) >= 0)

    def test_pair_interface(self):
        pairs = [(ProbVertex(LaplaceParam(0, 1), LaplaceParam(0, 1), np.zeros(4)),
                  (0.0, 10.0))]
        rep = coverage(pairs, [0.5])
        # x hits, y misses
        assert rep.empirical_coverage[0] == pytest.approx(0.5)
        assert rep.coverage_x[0] == 1.0
        assert rep.coverage_y[0] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            coverage([], [0.5])


class TestReliability:
    def test_sampled_labels_are_calibrated(self):
        rng = np.random.default_rng(3)
        n = 100_000
        probs = rng.dirichlet(np.ones(4), size=n)
        labels = np.array([rng.choice(4, p=p) for p in probs])
        rep = reliability(probs, labels, bins=10)
        assert rep.ece < 0.01

    def test_one_hot_correct_predictions(self):
        labels = np.array([0, 1, 2, 3, 2, 1])
        probs = np.eye(4)[labels]
        rep = reliability(probs, labels)
        assert rep.ece == 0.0

    def test_overconfident_single_bin(self):
        n = 1000
        probs = np.tile([0.9, 0.1 / 3, 0.1 / 3, 0.1 / 3], (n, 1))
        labels = np.zeros(n, dtype=int)
        labels[: n // 2] = 1  # half wrong
        rep = reliability(probs, labels)
        assert rep.ece == pytest.approx(0.4, abs=1e-9)

    def test_zero_gap_bins_give_zero_ece(self):
        # two confidence groups, each with accuracy equal to its confidence
        probs = np.vstack([
            np.tile([0.75, 0.25 / 3, 0.25 / 3, 0.25 / 3], (8, 1)),
            np.tile([0.45, 0.35, 0.1, 0.1], (20, 1)),
        ])
        labels = np.concatenate([
            np.array([0] * 6 + [1] * 2),          # accuracy 0.75 at conf 0.75
            np.array([0] * 9 + [1] * 11),         # accuracy 0.45 at conf 0.45
        ])
        rep = reliability(probs, labels, bins=10)
        assert rep.ece == pytest.approx(0.0, abs=1e-12)

    def test_invalid_probs_rejected(self):
        with pytest.raises(ValueError):
            reliability(np.array([[0.5, 0.2, 0.2, 0.2]]), np.array([0]))


def _prob_map(mu_elements, b=0.4, cls=ElementClass.LANE_DIVIDER, conf=1.0):
    els = []
    for mu in mu_elements:
        mu = np.asarray(mu, float)
        logits = np.full((len(mu), 4), -16.0)
        logits[:, 2] = 0.0
        els.append(ProbMapElement(mu, np.full_like(mu, b), logits, cls, conf))
    return ProbVectorMap(els, Pose2.identity(), perception_range=(1e6, 1e6))


class TestVertexPairing:
    def test_index_alignment_same_counts(self):
        pts = np.column_stack([np.linspace(0, 10, 20), np.zeros(20)])
        pred = _prob_map([pts + np.array([0.0, 0.1])])
        gt = VectorMap([MapElement(np.array([[0.0, 0.0], [10.0, 0.0]]),
                                   ElementClass.LANE_DIVIDER)], Pose2.identity())
        matched = match_vertex_pairs(pred, gt)
        assert len(matched.mu) == 20
        np.testing.assert_allclose(matched.gt, pts, atol=1e-12)
        np.testing.assert_array_equal(matched.labels, 2)

    def test_reversed_gt_is_reoriented(self):
        pts = np.column_stack([np.linspace(0, 10, 20), np.zeros(20)])
        pred = _prob_map([pts])
        gt = VectorMap([MapElement(np.array([[10.0, 0.0], [0.0, 0.0]]),
                                   ElementClass.LANE_DIVIDER)], Pose2.identity())
        matched = match_vertex_pairs(pred, gt)
        np.testing.assert_allclose(matched.gt, pts, atol=1e-12)

    def test_beyond_threshold_excluded(self):
        pts = np.column_stack([np.linspace(0, 10, 20), np.zeros(20)])
        pred = _prob_map([pts + np.array([0.0, 50.0])])
        gt = VectorMap([MapElement(np.array([[0.0, 0.0], [10.0, 0.0]]),
                                   ElementClass.LANE_DIVIDER)], Pose2.identity())
        matched = match_vertex_pairs(pred, gt, threshold=1.5)
        assert len(matched.mu) == 0


class TestStandardizeConsistency:
    def test_interval_endpoints_swap_under_quarter_turn(self):
        pmap = _prob_map([np.array([[1.0, 2.0], [3.0, 4.0]])], b=0.4)
        pmap.elements[0].b[:, 1] = 0.9
        out = standardize_map(pmap, Pose2(0, 0, np.pi / 2))
        for i in range(2):
            vx = pmap.elements[0].vertices[i]
            vy = out.elements[0].vertices[i]
            lo_old, hi_old = laplace_interval(vx.y, 0.8)
            lo_new, hi_new = laplace_interval(vy.x, 0.8)
            # after a quarter turn the old y axis becomes the new x axis
            assert hi_new - lo_new == pytest.approx(hi_old - lo_old, rel=1e-9)
