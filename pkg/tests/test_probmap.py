import math

import numpy as np
import pytest
from scipy.integrate import quad

from uncmap.geometry import ElementClass, Pose2
from uncmap.probmap import (
    LaplaceParam,
    ProbMapElement,
    ProbVectorMap,
    ProbVertex,
    b_from_sigma,
    density,
    encode_vertex,
    laplace_pdf,
    log_density,
    mean_map,
    nll_loss,
    rotate_uncertainty,
    sample_map,
    sigma_from_b,
    softmax,
    standardize_map,
)

V1 = (np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]))


def _element(mu, b, cls=ElementClass.LANE_DIVIDER, confidence=1.0):
    logits = np.zeros((len(mu), 4))
    return ProbMapElement(np.asarray(mu, float), np.asarray(b, float), logits, cls,
                          confidence)


class TestDensity:
    def test_peak_value(self):
        assert density(*V1, np.array([[0.0, 0.0]])) == pytest.approx(0.25)

    def test_one_meter_off(self):
        val = density(*V1, np.array([[1.0, 0.0]]))
        assert val == pytest.approx(0.25 * math.exp(-1), rel=1e-12)

    def test_log_density_adds_over_vertices(self):
        mu = np.array([[0.0, 0.0], [2.0, -1.0]])
        b = np.array([[0.5, 1.0], [2.0, 0.25]])
        sample = np.array([[0.3, -0.2], [1.0, 1.0]])
        total = log_density(mu, b, sample)
        parts = sum(log_density(mu[i:i + 1], b[i:i + 1], sample[i:i + 1])
                    for i in range(2))
        assert total == pytest.approx(parts, rel=1e-12)

    def test_exp_log_density_matches_density(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            v = int(rng.integers(1, 8))
            mu = rng.uniform(-5, 5, (v, 2))
            b = rng.uniform(0.05, 3.0, (v, 2))
            sample = rng.uniform(-5, 5, (v, 2))
            d = density(mu, b, sample)
            if d > 1e-300:
                assert math.exp(log_density(mu, b, sample)) == pytest.approx(d, rel=1e-12)

    def test_1d_density_integrates_to_one(self):
        for mu, b in [(0.0, 1.0), (2.5, 0.2), (-3.0, 4.0)]:
            total, _ = quad(lambda x: laplace_pdf(x, mu, b), mu - 40 * b, mu + 40 * b)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            density(*V1, np.array([[0.0, 0.0], [1.0, 1.0]]))


class TestNllLoss:
    def test_zero_residual(self):
        loss, _, _ = nll_loss(np.array([[0.0, 0.0]]), np.array([[0.5, 0.5]]),
                              np.array([[0.0, 0.0]]))
        assert loss == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        loss, _, _ = nll_loss(*V1, np.array([[1.0, 0.0]]))
        assert loss == pytest.approx(2 * math.log(2) + 1, rel=1e-12)

    def test_scale_gradient_zero_at_mle(self):
        _, _, gb = nll_loss(np.array([0.0]), np.array([1.0]), np.array([1.0]))
        assert gb[0] == pytest.approx(0.0, abs=1e-15)

    def test_subgradient_zero_at_target(self):
        _, gmu, _ = nll_loss(np.array([2.0]), np.array([1.0]), np.array([2.0]))
        assert gmu[0] == 0.0

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError):
            nll_loss(np.array([0.0]), np.array([0.0]), np.array([1.0]))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(1)
        n = 1000
        mu = rng.uniform(-3, 3, n)
        b = rng.uniform(0.05, 5.0, n)
        v = rng.uniform(-3, 3, n)
        h = 1e-6
        _, gmu, gb = nll_loss(mu, b, v)

        def terms(mu_, b_):
            return np.log(2 * b_) + np.abs(v - mu_) / b_

        fd_mu = (terms(mu + h, b) - terms(mu - h, b)) / (2 * h)
        fd_b = (terms(mu, b + h) - terms(mu, b - h)) / (2 * h)
        rel_mu = np.abs(gmu - fd_mu) / np.maximum(np.abs(fd_mu), 1e-12)
        rel_b = np.abs(gb - fd_b) / np.maximum(np.abs(fd_b), 1e-12)
        assert rel_mu.max() < 1e-6
        assert rel_b.max() < 1e-6


class TestScaleConversions:
    def test_sigma_from_b(self):
        assert sigma_from_b(1.0) == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_inverse(self):
        assert b_from_sigma(math.sqrt(2)) == pytest.approx(1.0, rel=1e-15)

    def test_roundtrip(self):
        rng = np.random.default_rng(2)
        b = rng.uniform(0.01, 10, 1000)
        np.testing.assert_allclose(b_from_sigma(sigma_from_b(b)), b, rtol=1e-15)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            sigma_from_b(0.0)
        with pytest.raises(ValueError):
            b_from_sigma(-1.0)


class TestRotateUncertainty:
    def test_zero_angle_identity(self):
        sx, sy = rotate_uncertainty(3.0, 4.0, 0.0)
        assert (sx, sy) == (3.0, 4.0)

    def test_quarter_turn_swaps(self):
        sx, sy = rotate_uncertainty(3.0, 4.0, np.pi / 2)
        assert (float(sx), float(sy)) == (4.0, 3.0)

    def test_energy_preserved(self):
        rng = np.random.default_rng(3)
        sx = rng.uniform(0.1, 10, 2000)
        sy = rng.uniform(0.1, 10, 2000)
        for theta in rng.uniform(-np.pi, np.pi, 5):
            rx, ry = rotate_uncertainty(sx, sy, theta)
            np.testing.assert_allclose(rx * rx + ry * ry, sx * sx + sy * sy, rtol=1e-12)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            rotate_uncertainty(0.0, 1.0, 0.3)


def _small_map(b=(0.3, 0.8)):
    el = ProbMapElement(
        np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 5.0]]),
        np.tile(np.asarray(b, float), (3, 1)),
        np.arange(12, dtype=float).reshape(3, 4),
        ElementClass.ROAD_BOUNDARY,
        confidence=0.9,
    )
    return ProbVectorMap([el], Pose2.identity())


class TestStandardize:
    def test_identity_frame_is_noop(self):
        pmap = _small_map()
        out = standardize_map(pmap, Pose2.identity())
        np.testing.assert_allclose(out.elements[0].mu, pmap.elements[0].mu, atol=1e-12)
        np.testing.assert_allclose(out.elements[0].b, pmap.elements[0].b, atol=1e-12)

    def test_quarter_turn_swaps_scales(self):
        pmap = _small_map(b=(0.3, 0.8))
        out = standardize_map(pmap, Pose2(0, 0, np.pi / 2))
        np.testing.assert_allclose(out.elements[0].b[:, 0], 0.8, rtol=1e-12)
        np.testing.assert_allclose(out.elements[0].b[:, 1], 0.3, rtol=1e-12)

    def test_then_identity_composes(self):
        pmap = _small_map()
        frame = Pose2(1.0, -0.5, 0.4)
        once = standardize_map(pmap, frame)
        twice = standardize_map(once, Pose2.identity())
        np.testing.assert_allclose(twice.elements[0].mu, once.elements[0].mu, atol=1e-12)
        np.testing.assert_allclose(twice.elements[0].b, once.elements[0].b, atol=1e-12)

    def test_inverse_frame_restores_locations(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pmap = _small_map(b=tuple(rng.uniform(0.1, 2.0, 2)))
            frame = Pose2(*rng.uniform(-5, 5, 2), rng.uniform(-np.pi, np.pi))
            back = standardize_map(standardize_map(pmap, frame), frame.inverse())
            np.testing.assert_allclose(back.elements[0].mu, pmap.elements[0].mu,
                                       atol=1e-9)

    def test_inverse_frame_restores_scales_for_quarter_turns(self):
        for heading in (0.0, np.pi / 2, np.pi, -np.pi / 2):
            pmap = _small_map(b=(0.25, 1.5))
            frame = Pose2(2.0, 1.0, heading)
            back = standardize_map(standardize_map(pmap, frame), frame.inverse())
            np.testing.assert_allclose(back.elements[0].b, pmap.elements[0].b,
                                       rtol=1e-9)

    def test_generic_rotation_does_not_restore_scales(self):
        pmap = _small_map(b=(0.25, 1.5))
        frame = Pose2(0, 0, 0.7)
        back = standardize_map(standardize_map(pmap, frame), frame.inverse())
        assert not np.allclose(back.elements[0].b, pmap.elements[0].b, rtol=1e-3)


class TestEncodeVertex:
    def test_uniform_logits(self):
        v = ProbVertex(LaplaceParam(0, 1), LaplaceParam(0, 1), np.zeros(4))
        feat = encode_vertex(v)
        np.testing.assert_allclose(feat.class_probs, 0.25, rtol=1e-12)

    def test_hand_feature(self):
        v = ProbVertex(LaplaceParam(1.0, 0.1), LaplaceParam(2.0, 0.2),
                       np.array([math.log(2), 0.0, 0.0, 0.0]))
        feat = encode_vertex(v)
        np.testing.assert_allclose(
            feat.values, [1, 2, 0.1, 0.2, 0.4, 0.2, 0.2, 0.2], rtol=1e-12)

    def test_length_and_simplex(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            v = ProbVertex(LaplaceParam(0, 1), LaplaceParam(0, 1),
                           rng.uniform(-10, 10, 4))
            feat = encode_vertex(v)
            assert len(feat.values) == 8
            assert feat.class_probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(feat.class_probs >= 0)

    def test_logit_shift_invariance(self):
        rng = np.random.default_rng(6)
        logits = rng.uniform(-3, 3, 4)
        np.testing.assert_allclose(softmax(logits), softmax(logits + 17.3), rtol=1e-9)


class TestMeanAndSampleMap:
    def test_mean_map_ignores_scale(self):
        wide = _small_map(b=(1.0, 1.0))
        narrow = _small_map(b=(0.01, 0.01))
        np.testing.assert_array_equal(mean_map(wide).elements[0].vertices,
                                      mean_map(narrow).elements[0].vertices)

    def test_empty_map(self):
        out = mean_map(ProbVectorMap([], Pose2.identity()))
        assert out.elements == []

    def test_vertex_count_preserved(self):
        pmap = _small_map()
        out = mean_map(pmap)
        assert len(out.elements[0].vertices) == pmap.elements[0].n_vertices

    def test_sampling_deterministic(self):
        pmap = _small_map()
        a = sample_map(pmap, seed=42)
        b = sample_map(pmap, seed=42)
        np.testing.assert_array_equal(a.elements[0].vertices, b.elements[0].vertices)

    def test_degenerate_scale_collapses_to_location(self):
        pmap = _small_map(b=(1e-12, 1e-12))
        out = sample_map(pmap, seed=7)
        np.testing.assert_allclose(out.elements[0].vertices, pmap.elements[0].mu,
                                   atol=1e-9)

    def test_sample_moments(self):
        el = ProbMapElement(np.zeros((50_000, 2)), np.ones((50_000, 2)),
                            np.zeros((50_000, 4)), ElementClass.LANE_DIVIDER)
        pmap = ProbVectorMap([el], Pose2.identity(), perception_range=(1e6, 1e6))
        draws = sample_map(pmap, seed=123).elements[0].vertices.ravel()
        assert len(draws) == 100_000
        assert abs(np.median(draws)) < 0.01
        assert abs(np.abs(draws).mean() - 1.0) < 0.01


class TestValidation:
    def test_element_requires_positive_scale(self):
        with pytest.raises(ValueError):
            _element(np.zeros((2, 2)), np.array([[1.0, 0.0], [1.0, 1.0]]))

    def test_element_requires_two_vertices(self):
        with pytest.raises(ValueError):
            _element(np.zeros((1, 2)), np.ones((1, 2)))

    def test_range_check_warns(self):
        el = _element(np.array([[0.0, 0.0], [100.0, 0.0]]), np.ones((2, 2)))
        with pytest.warns(UserWarning):
            ProbVectorMap([el], Pose2.identity())

    def test_vertices_roundtrip(self):
        el = _small_map().elements[0]
        rebuilt = ProbMapElement.from_vertices(el.vertices, el.element_class,
                                               el.confidence)
        np.testing.assert_array_equal(rebuilt.mu, el.mu)
        np.testing.assert_array_equal(rebuilt.b, el.b)
