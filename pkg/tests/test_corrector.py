"""Patch construction, stacking, serialization, and memorization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fewpatch import (
    Ball,
    BallDistribution,
    ConstantLabel,
    NearestCentroid,
    PatchedClassifier,
    Seed,
    build_few_patch,
    build_from_few_patch,
    empirical_mean,
    memorization_check,
    patch_from_json,
    patch_to_json,
    sample,
)
from fewpatch.corrector import (
    PROVENANCE_FEW,
    PROVENANCE_FROM_FEW,
    Patch,
)
from fewpatch.errors import (
    ContractViolationError,
    DeltaNotPositiveError,
    DimensionMismatchError,
    HypothesisViolatedError,
    ZeroMeanError,
)


def orthant_latents(n: int, k: int, stream: int) -> np.ndarray:
    d = BallDistribution(Ball(np.zeros(n), 1.0))
    return sample(d, Seed(4242, stream), k, fold=True)


def cluster_latents(n: int, k: int, stream: int, dist: float = 2.0) -> np.ndarray:
    center = np.zeros(n)
    center[0] = dist
    d = BallDistribution(Ball(center, 1.0))
    return sample(d, Seed(4242, stream), k)


class TestBuildFewPatch:
    def test_memorizes_exactly(self):
        pts = orthant_latents(12, 7, 0)
        patch = build_few_patch(pts, "new")
        assert memorization_check(patch, pts, tol=0.0)
        assert all(patch.fires(row) for row in pts)

    def test_theta_is_min_projection(self):
        pts = orthant_latents(6, 5, 1)
        patch = build_few_patch(pts, 3)
        dots = [float(np.dot(patch.direction, row)) for row in pts]
        assert patch.theta == min(dots)

    def test_direction_is_unit_mean(self):
        pts = orthant_latents(9, 4, 2)
        patch = build_few_patch(pts, "new")
        mean = empirical_mean(pts)
        assert np.linalg.norm(patch.direction) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(patch.direction, mean / np.linalg.norm(mean))

    def test_provenance_and_k(self):
        pts = orthant_latents(5, 3, 3)
        patch = build_few_patch(pts, "new")
        assert patch.provenance == PROVENANCE_FEW
        assert patch.k == 3
        assert patch.margin is None

    def test_zero_mean_rejected(self):
        with pytest.raises(ZeroMeanError):
            build_few_patch([[1.0, 0.0], [-1.0, 0.0]], "new")

    def test_hypothesis_violation_reports_indices(self):
        pts = np.array([[1.0, 0.0], [0.9, 0.1], [-0.5, 0.2]])
        with pytest.raises(HypothesisViolatedError) as info:
            build_few_patch(pts, "new")
        assert 2 in info.value.indices

    def test_bad_label_rejected(self):
        with pytest.raises(ContractViolationError):
            build_few_patch(orthant_latents(4, 2, 4), 1.5)

    @given(
        seed=st.integers(min_value=0, max_value=2**32),
        n=st.integers(min_value=1, max_value=40),
        k=st.integers(min_value=1, max_value=12),
    )
    @settings(max_examples=60, deadline=None)
    def test_convex_combinations_covered(self, seed, n, k):
        pts = orthant_latents(n, k, 0 if seed == 0 else seed)
        patch = build_few_patch(pts, "new")
        rng = np.random.default_rng(seed)
        weights = rng.dirichlet(np.ones(k), size=16)
        combos = weights @ pts
        proj = combos @ patch.direction
        assert np.all(proj >= patch.theta - 1e-9)


class TestBuildFromFewPatch:
    def test_fields_and_margin(self):
        pts = cluster_latents(20, 5, 5)
        patch = build_from_few_patch(pts, "new", v=1.0, delta=0.3, theta_mix=0.6)
        assert patch.provenance == PROVENANCE_FROM_FEW
        assert patch.v == 1.0 and patch.delta == 0.3
        nm = float(np.linalg.norm(empirical_mean(pts)))
        assert patch.margin == pytest.approx(nm - math.sqrt(0.44), rel=1e-12)
        assert patch.theta_lo == pytest.approx(max(patch.margin - 1.0, 0.0))
        assert patch.theta_hi == pytest.approx(patch.margin)

    @pytest.mark.parametrize("mix,pick", [(0.0, "theta_lo"), (1.0, "theta_hi")])
    def test_theta_mix_endpoints(self, mix, pick):
        pts = cluster_latents(20, 5, 6)
        patch = build_from_few_patch(pts, "new", v=1.0, delta=0.3, theta_mix=mix)
        assert patch.theta == pytest.approx(getattr(patch, pick), rel=1e-15)

    def test_margin_not_positive_raises(self):
        pts = orthant_latents(20, 5, 7) * 0.1
        with pytest.raises(DeltaNotPositiveError) as info:
            build_from_few_patch(pts, "new", v=1.0, delta=0.3)
        assert info.value.norm_mean < info.value.upper_root

    def test_spread_examples_rejected(self):
        pts = np.array([[0.0, 0.0], [5.0, 0.0]])
        with pytest.raises(ContractViolationError):
            build_from_few_patch(pts, "new", v=1.0, delta=0.3)

    def test_theta_mix_domain(self):
        pts = cluster_latents(8, 3, 8)
        with pytest.raises(ContractViolationError):
            build_from_few_patch(pts, "new", v=1.0, delta=0.3, theta_mix=1.5)


class TestPatch:
    def test_fires_at_threshold(self):
        w = np.zeros(4)
        w[0] = 1.0
        patch = Patch(direction=w, theta=0.5, new_label="new", provenance=PROVENANCE_FEW, k=1)
        x = np.array([0.5, 0.3, 0.0, 0.0])
        assert patch.fires(x)
        assert not patch.fires(x - np.array([1e-12, 0, 0, 0]))

    def test_direction_must_be_unit(self):
        with pytest.raises(ContractViolationError):
            Patch(
                direction=np.array([1.0, 1.0]),
                theta=0.1,
                new_label="new",
                provenance=PROVENANCE_FEW,
                k=1,
            )

    def test_fires_dimension_mismatch(self):
        patch = build_few_patch(orthant_latents(3, 2, 9), "new")
        with pytest.raises(DimensionMismatchError):
            patch.fires([1.0, 0.0])

    def test_unknown_provenance(self):
        with pytest.raises(ContractViolationError):
            Patch(
                direction=np.array([1.0, 0.0]),
                theta=0.1,
                new_label="new",
                provenance="Elsewhere",
                k=1,
            )


class TestMemorizationCheck:
    def test_tolerance_semantics(self):
        pts = orthant_latents(5, 4, 10)
        patch = build_few_patch(pts, "new")
        shifted = Patch(
            direction=patch.direction,
            theta=patch.theta + 1e-6,
            new_label=patch.new_label,
            provenance=patch.provenance,
            k=patch.k,
        )
        assert not memorization_check(shifted, pts, tol=0.0)
        assert memorization_check(shifted, pts, tol=1e-5)

    def test_negative_tol_rejected(self):
        pts = orthant_latents(5, 4, 11)
        patch = build_few_patch(pts, "new")
        with pytest.raises(ContractViolationError):
            memorization_check(patch, pts, tol=-1e-9)


class TestClassifiers:
    def test_constant_label(self):
        assert ConstantLabel("base").classify([1.0, 2.0]) == "base"

    def test_nearest_centroid(self):
        nc = NearestCentroid([([0.0, 0.0], "a"), ([2.0, 0.0], "b")])
        assert nc.classify([0.4, 0.1]) == "a"
        assert nc.classify([1.9, -0.2]) == "b"

    def test_nearest_centroid_tie_prefers_first(self):
        nc = NearestCentroid([([0.0, 0.0], "a"), ([2.0, 0.0], "b")])
        assert nc.classify([1.0, 0.0]) == "a"

    def test_nearest_centroid_dim_mismatch(self):
        nc = NearestCentroid([([0.0, 0.0], "a")])
        with pytest.raises(DimensionMismatchError):
            nc.classify([1.0])

    def test_patched_classifier_fallback(self):
        patch = build_few_patch(orthant_latents(4, 3, 12), "new")
        pc = PatchedClassifier(ConstantLabel("base"), [patch])
        assert pc.classify(-np.ones(4)) == "base"

    def test_latest_patch_wins(self):
        w = np.zeros(3)
        w[0] = 1.0
        first = Patch(direction=w, theta=0.2, new_label="first", provenance=PROVENANCE_FEW, k=1)
        second = Patch(direction=w, theta=0.2, new_label="second", provenance=PROVENANCE_FEW, k=1)
        pc = PatchedClassifier(ConstantLabel("base"), [first]).with_patch(second)
        assert pc.classify([0.9, 0.0, 0.0]) == "second"

    def test_earlier_patch_still_reachable(self):
        w1 = np.array([1.0, 0.0])
        w2 = np.array([0.0, 1.0])
        first = Patch(direction=w1, theta=0.5, new_label="first", provenance=PROVENANCE_FEW, k=1)
        second = Patch(direction=w2, theta=0.5, new_label="second", provenance=PROVENANCE_FEW, k=1)
        pc = PatchedClassifier(ConstantLabel("base"), [first, second])
        assert pc.classify([0.9, 0.0]) == "first"
        assert pc.classify([0.0, 0.9]) == "second"
        assert pc.classify([0.0, -0.9]) == "base"

    def test_with_patch_is_pure(self):
        patch = build_few_patch(orthant_latents(4, 3, 13), "new")
        pc = PatchedClassifier(ConstantLabel("base"))
        pc2 = pc.with_patch(patch)
        assert len(pc.patches) == 0 and len(pc2.patches) == 1

    def test_patch_dimension_consistency(self):
        a = build_few_patch(orthant_latents(4, 3, 14), "new")
        b = build_few_patch(orthant_latents(5, 3, 15), "new")
        with pytest.raises(DimensionMismatchError):
            PatchedClassifier(ConstantLabel("base"), [a, b])


class TestJsonRoundTrip:
    def test_few_patch_round_trip(self):
        patch = build_few_patch(orthant_latents(6, 4, 16), "new")
        back = patch_from_json(patch_to_json(patch))
        assert np.array_equal(back.direction, patch.direction)
        assert back.theta == patch.theta
        assert back.new_label == patch.new_label
        assert back.provenance == patch.provenance
        assert back.k == patch.k

    def test_from_few_patch_round_trip(self):
        patch = build_from_few_patch(
            cluster_latents(10, 5, 17), 7, v=1.0, delta=0.3, theta_mix=0.25
        )
        back = patch_from_json(patch_to_json(patch))
        assert back.v == patch.v and back.delta == patch.delta
        assert back.margin == patch.margin
        assert back.theta_lo == patch.theta_lo and back.theta_hi == patch.theta_hi
        assert back.new_label == 7

    def test_round_trip_preserves_behavior(self):
        patch = build_few_patch(orthant_latents(6, 4, 18), "new")
        back = patch_from_json(patch_to_json(patch))
        probe = sample(BallDistribution(Ball(np.zeros(6), 1.0)), Seed(5, 5), 200)
        fires_a = [patch.fires(x) for x in probe]
        fires_b = [back.fires(x) for x in probe]
        assert fires_a == fires_b

    @pytest.mark.parametrize(
        "text",
        [
            "not json at all",
            "[1, 2, 3]",
            '{"kind": "other"}',
            '{"kind": "patch", "dim": 2}',
            '{"kind": "patch", "dim": 2, "direction": [1.0], "theta": 0.1}',
            '{"kind": "patch", "dim": 1, "direction": [1.0], "theta": null,'
            ' "new_label": "x", "provenance": "FewExamples", "k": 1}',
        ],
    )
    def test_malformed_payloads(self, text):
        with pytest.raises(ContractViolationError):
            patch_from_json(text)


class TestEmpiricalMean:
    def test_mean_of_rows(self):
        pts = np.array([[1.0, 0.0], [3.0, 4.0]])
        assert np.array_equal(empirical_mean(pts), np.array([2.0, 2.0]))

    def test_rejects_empty(self):
        with pytest.raises(ContractViolationError):
            empirical_mean(np.empty((0, 3)))
