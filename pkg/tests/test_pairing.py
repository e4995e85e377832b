import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zygosity.basis import CsrCoefficients
from zygosity.pairing import (
    Parcellation,
    ZeroNormError,
    columnwise_correlation,
    csr_correlation,
    fisher_inv,
    fisher_z,
    pair_to_features,
    region_average,
)

from oracles import atanh_by_logs, quadrature_correlation, tanh_by_exps


vectors = arrays(np.float64, 8, elements=st.floats(-10, 10, allow_nan=False)).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


class TestCorrelation:
    def test_self_and_negation(self, rng):
        a = rng.normal(size=119)
        assert csr_correlation(a, a) == pytest.approx(1.0, abs=1e-12)
        assert csr_correlation(a, -a) == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal_vectors(self):
        assert csr_correlation([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]) == 0.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroNormError):
            csr_correlation(np.zeros(4), np.ones(4))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_time_domain_correlation(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=(2, 20))
        b = 0.6 * a + b
        assert abs(csr_correlation(a, b) - quadrature_correlation(a, b)) < 1e-6

    @given(vectors, vectors)
    @settings(max_examples=60)
    def test_symmetric_and_bounded(self, a, b):
        r = csr_correlation(a, b)
        assert r == csr_correlation(b, a)
        assert -1.0 <= r <= 1.0

    @given(vectors, vectors, st.floats(0.01, 100), st.floats(0.01, 100))
    @settings(max_examples=60)
    def test_invariant_to_positive_scaling(self, a, b, s1, s2):
        assert csr_correlation(s1 * a, s2 * b) == pytest.approx(csr_correlation(a, b), abs=1e-12)

    def test_columnwise_matches_scalar(self, rng):
        A, B = rng.normal(size=(2, 10, 6))
        got = columnwise_correlation(A, B)
        for j in range(6):
            assert got[j] == pytest.approx(csr_correlation(A[:, j], B[:, j]), abs=1e-14)

    def test_columnwise_reports_zero_columns(self, rng):
        A = rng.normal(size=(4, 5))
        A[:, 3] = 0.0
        with pytest.raises(ZeroNormError) as err:
            columnwise_correlation(A, rng.normal(size=(4, 5)))
        assert err.value.columns == (3,)


class TestFisher:
    def test_known_values(self):
        assert fisher_z(0.5) == pytest.approx(0.5493061443340549, abs=1e-12)
        assert fisher_z(0.5) == pytest.approx(atanh_by_logs(0.5), abs=1e-12)
        assert fisher_inv(1.0) == pytest.approx(0.7615941559557649, abs=1e-12)
        assert fisher_z(0.0) == 0.0

    def test_clamps_at_one(self):
        top = fisher_z(1.0)
        assert math.isfinite(top)
        assert top == pytest.approx(atanh_by_logs(1 - 1e-7), rel=1e-9)
        assert fisher_z(-1.0) == -top

    @pytest.mark.parametrize("bad", [1.5, -1.01, float("nan")])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            fisher_z(bad)

    def test_inverse_rejects_non_finite(self):
        with pytest.raises(ValueError):
            fisher_inv(float("inf"))

    @given(st.floats(-0.999999, 0.999999))
    def test_round_trip(self, r):
        assert fisher_inv(fisher_z(r)) == pytest.approx(r, abs=1e-9)

    @given(st.floats(-1, 1))
    def test_odd(self, r):
        assert fisher_z(-r) == -fisher_z(r)

    def test_vectorized(self):
        out = fisher_z(np.array([0.0, 0.5]))
        assert isinstance(out, np.ndarray) and out.shape == (2,)


class TestRegionAverage:
    def test_constant_region(self):
        parc = Parcellation.from_labels([1, 1, 1, 1])
        np.testing.assert_allclose(region_average([0.3] * 4, parc), [0.3], atol=1e-12)

    def test_opposite_values_cancel(self):
        parc = Parcellation.from_labels([1, 1])
        assert abs(region_average([0.5, -0.5], parc)[0]) < 1e-12

    def test_two_voxel_hand_computation(self):
        parc = Parcellation.from_labels([1, 1])
        expected = tanh_by_exps((atanh_by_logs(0.2) + atanh_by_logs(0.8)) / 2)
        got = region_average([0.2, 0.8], parc)[0]
        assert got == pytest.approx(expected, abs=1e-12)
        # pooling on the z scale is pulled toward the larger correlation
        assert got > 0.5

    def test_regions_are_separate(self):
        parc = Parcellation.from_labels([2, 1, 2, 1])
        out = region_average([0.1, 0.4, 0.1, 0.4], parc)
        np.testing.assert_allclose(out, [0.4, 0.1], atol=1e-12)

    @given(st.lists(st.floats(-0.99, 0.99), min_size=2, max_size=12), st.randoms())
    @settings(max_examples=50)
    def test_invariant_to_voxel_order_within_region(self, rhos, random):
        labels = [1 + (i % 2) for i in range(len(rhos))]
        order = list(range(len(rhos)))
        random.shuffle(order)
        a = region_average(rhos, Parcellation.from_labels(labels))
        b = region_average([rhos[i] for i in order], Parcellation.from_labels([labels[i] for i in order]))
        np.testing.assert_allclose(a, b, atol=1e-12)

    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=12))
    def test_result_within_member_range(self, rhos):
        out = region_average(rhos, Parcellation.from_labels([1] * len(rhos)))[0]
        clamp = 1 - 1e-7
        lo = float(np.clip(min(rhos), -clamp, clamp))
        hi = float(np.clip(max(rhos), -clamp, clamp))
        assert lo - 1e-12 <= out <= hi + 1e-12

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            region_average([0.1, 0.2], Parcellation.from_labels([1, 1, 1]))


class TestParcellation:
    def test_empty_region_rejected(self):
        with pytest.raises(ValueError, match="without voxels"):
            Parcellation(np.array([1, 3, 3]), 3)

    def test_label_range(self):
        with pytest.raises(ValueError):
            Parcellation(np.array([0, 1]), 1)

    def test_sizes(self):
        parc = Parcellation.from_labels([1, 2, 2, 3, 3, 3])
        np.testing.assert_array_equal(parc.sizes, [1, 2, 3])
        assert parc.n_voxels == 6


class TestPairToFeatures:
    def test_identical_subjects_give_clamped_one(self, rng):
        C = CsrCoefficients(9, rng.normal(size=(10, 6)))
        out = pair_to_features(C, C, Parcellation.from_labels([1, 1, 2, 2, 3, 3]))
        expected = tanh_by_exps(atanh_by_logs(1 - 1e-7))
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_singletons_equal_voxel_correlations(self, rng):
        A = CsrCoefficients(7, rng.normal(size=(8, 5)))
        B = CsrCoefficients(7, rng.normal(size=(8, 5)))
        out = pair_to_features(A, B, Parcellation.singletons(5))
        direct = [csr_correlation(A.matrix[1:, j], B.matrix[1:, j]) for j in range(5)]
        np.testing.assert_allclose(out, direct, atol=1e-12)

    def test_constant_term_ignored(self):
        a = np.array([[5.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        b = a.copy()
        b[0] = [-3.0, 100.0, 7.0]
        out = pair_to_features(CsrCoefficients(2, a), CsrCoefficients(2, b), Parcellation.singletons(3))
        np.testing.assert_allclose(out, 1 - 1e-7, atol=1e-12)

    def test_small_hand_case(self):
        # two voxels in one region; coefficient vectors (rows 1..2) chosen by hand
        a = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        b = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        r1 = 1 / math.sqrt(2)          # (1,0) vs (1,1)
        r2 = 1 / (math.sqrt(2) * 1)    # (1,1) vs (0,1)
        expected = tanh_by_exps((atanh_by_logs(r1) + atanh_by_logs(r2)) / 2)
        out = pair_to_features(CsrCoefficients(2, a), CsrCoefficients(2, b), Parcellation.from_labels([1, 1]))
        assert out[0] == pytest.approx(expected, abs=1e-12)

    def test_mismatches_rejected(self, rng):
        A = CsrCoefficients(3, rng.normal(size=(4, 2)))
        with pytest.raises(ValueError):
            pair_to_features(A, CsrCoefficients(4, rng.normal(size=(5, 2))), Parcellation.singletons(2))
        with pytest.raises(ValueError):
            pair_to_features(A, A, Parcellation.singletons(3))

    def test_zero_voxel_raises(self, rng):
        a = rng.normal(size=(4, 2))
        a[1:, 1] = 0.0
        with pytest.raises(ZeroNormError):
            pair_to_features(CsrCoefficients(3, a), CsrCoefficients(3, rng.normal(size=(4, 2))),
                             Parcellation.singletons(2))
