import numpy as np
import pytest

from covcp import (
    DataMatrix,
    DataValidationError,
    InvalidSegmentError,
    NotPositiveDefiniteError,
    build_prefix_moments,
    haar_orthogonal,
    log_det_spd,
    segment_covariance,
    sequential_log_dets,
    split_range,
)


def two_pass_covariance(segment):
    """Direct mean-subtracted covariance, divisor count-1 (the oracle)."""
    centered = segment - segment.mean(axis=0)
    return centered.T @ centered / (len(segment) - 1)


def rel_frobenius(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestDataMatrix:
    def test_rejects_nonfinite_with_location(self):
        values = np.zeros((4, 3))
        values[2, 1] = np.nan
        with pytest.raises(DataValidationError, match=r"row 3, column 2"):
            DataMatrix(values)

    def test_rejects_bad_shapes(self):
        with pytest.raises(DataValidationError):
            DataMatrix(np.zeros((2, 3)))
        with pytest.raises(DataValidationError):
            DataMatrix(np.zeros((5, 0)))
        with pytest.raises(DataValidationError):
            DataMatrix(np.zeros(5))

    def test_ratio(self):
        dm = DataMatrix(np.random.default_rng(0).standard_normal((10, 4)))
        assert dm.n == 10 and dm.p == 4 and dm.ratio == 0.4


class TestPrefixMoments:
    def test_first_prefix_is_single_outer_product(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal((3, 4))
        moments = build_prefix_moments(DataMatrix(y))
        np.testing.assert_array_equal(moments.cum_outer[1], np.outer(y[0], y[0]))
        np.testing.assert_array_equal(moments.cum_sum[1], y[0])

    def test_all_zero_data(self):
        moments = build_prefix_moments(DataMatrix(np.zeros((5, 2))))
        assert not moments.cum_outer.any()
        assert not moments.cum_sum.any()

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(2)
        y = rng.standard_normal((5, 3))
        moments = build_prefix_moments(DataMatrix(y))
        direct = sum(np.outer(row, row) for row in y)
        assert rel_frobenius(moments.cum_outer[5], direct) < 1e-12

    def test_suffix_consistency(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal((40, 5)) + 2.0
        moments = build_prefix_moments(DataMatrix(y))
        for m in (1, 13, 39):
            suffix = sum(np.outer(row, row) for row in y[m:])
            got = moments.cum_outer[40] - moments.cum_outer[m]
            assert rel_frobenius(got, suffix) < 1e-9

    def test_prefixes_positive_semidefinite(self):
        rng = np.random.default_rng(4)
        moments = build_prefix_moments(DataMatrix(rng.standard_normal((20, 4))))
        for m in range(1, 21):
            assert np.linalg.eigvalsh(moments.cum_outer[m]).min() > -1e-10


class TestSegmentCovariance:
    def test_two_point_variance(self):
        moments = build_prefix_moments(DataMatrix([[1.0], [3.0], [100.0]]))
        seg = segment_covariance(moments, 1, 2)
        assert seg.divisor == 1
        assert seg.matrix[0, 0] == pytest.approx(2.0, abs=1e-14)

    def test_constant_segment_is_zero(self):
        y = np.tile([1.5, -2.0, 0.5], (6, 1))
        moments = build_prefix_moments(DataMatrix(y))
        seg = segment_covariance(moments, 2, 5)
        assert np.abs(seg.matrix).max() < 1e-12

    def test_matches_two_pass(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal((10, 4)) + 1.0
        moments = build_prefix_moments(DataMatrix(y))
        got = segment_covariance(moments, 1, 10).matrix
        assert rel_frobenius(got, two_pass_covariance(y)) < 1e-10

    def test_invalid_segments(self):
        moments = build_prefix_moments(DataMatrix(np.eye(4)))
        with pytest.raises(InvalidSegmentError):
            segment_covariance(moments, 3, 3)
        with pytest.raises(InvalidSegmentError):
            segment_covariance(moments, 3, 2)
        with pytest.raises(InvalidSegmentError):
            segment_covariance(moments, 0, 2)
        with pytest.raises(InvalidSegmentError):
            segment_covariance(moments, 1, 5)

    def test_prefix_difference_equals_two_pass_sweep(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            n = int(rng.integers(10, 201))
            p = int(rng.integers(1, 21))
            y = rng.standard_normal((n, p)) * 3.0 + rng.standard_normal(p)
            moments = build_prefix_moments(DataMatrix(y))
            i = int(rng.integers(1, n - 1))
            j = int(rng.integers(i + 1, n + 1))
            got = segment_covariance(moments, i, j).matrix
            assert rel_frobenius(got, two_pass_covariance(y[i - 1:j])) < 1e-10

    def test_symmetry_after_symmetrization(self):
        rng = np.random.default_rng(7)
        y = rng.standard_normal((50, 8)) * 10.0
        moments = build_prefix_moments(DataMatrix(y))
        mat = segment_covariance(moments, 3, 47).matrix
        asym = np.abs(mat - mat.T).max()
        assert asym <= 1e-12 * np.abs(mat).max()


class TestLogDetSpd:
    def test_identity(self):
        for p in (1, 3, 7):
            assert log_det_spd(np.eye(p)) == pytest.approx(0.0, abs=1e-14)

    def test_diagonal(self):
        assert log_det_spd(np.diag([2.0, 8.0])) == pytest.approx(np.log(16.0),
                                                                 abs=1e-12)

    def test_matches_eigenvalue_sum(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6))
        spd = a @ a.T + np.eye(6)
        expected = np.log(np.linalg.eigvalsh(spd)).sum()
        assert abs(log_det_spd(spd) - expected) < 1e-10

    def test_rejects_indefinite_with_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as exc:
            log_det_spd(np.diag([1.0, -1.0, 2.0]))
        assert exc.value.pivot == 2

    def test_rejects_non_square(self):
        with pytest.raises(DataValidationError):
            log_det_spd(np.zeros((2, 3)))


class TestSequentialLogDets:
    def test_scalar_variance_oracle(self):
        rng = np.random.default_rng(9)
        y = rng.standard_normal((10, 1))
        seq = sequential_log_dets(DataMatrix(y), 3, 7)
        assert list(seq.splits) == [3, 4, 5, 6, 7]
        for m, left, right in seq:
            assert left == pytest.approx(np.log(np.var(y[:m], ddof=1)), abs=1e-10)
            assert right == pytest.approx(np.log(np.var(y[m:], ddof=1)), abs=1e-10)
        assert seq.full == pytest.approx(np.log(np.var(y, ddof=1)), abs=1e-10)

    def test_orthogonal_rotation_invariance(self):
        rng = np.random.default_rng(10)
        y = rng.standard_normal((40, 4))
        q = haar_orthogonal(4, seed=11)
        base = sequential_log_dets(DataMatrix(y), 8, 32)
        rotated = sequential_log_dets(DataMatrix(y @ q.T), 8, 32)
        np.testing.assert_allclose(rotated.left, base.left, atol=1e-8)
        np.testing.assert_allclose(rotated.right, base.right, atol=1e-8)
        assert abs(rotated.full - base.full) < 1e-8

    def test_empty_range(self):
        rng = np.random.default_rng(12)
        seq = sequential_log_dets(DataMatrix(rng.standard_normal((12, 2))), 8, 5)
        assert len(seq) == 0

    def test_rank_deficient_segment_names_split(self):
        rng = np.random.default_rng(13)
        y = rng.standard_normal((20, 3))
        y[:6] = y[0]  # left segment at m=5 is constant, covariance singular
        with pytest.raises(NotPositiveDefiniteError, match=r"m=5"):
            sequential_log_dets(DataMatrix(y), 5, 15)

    def test_affine_equivariance_of_log_det(self):
        rng = np.random.default_rng(14)
        y = rng.standard_normal((60, 5))
        a = rng.standard_normal((5, 5)) + 3.0 * np.eye(5)
        b = rng.standard_normal(5)
        shift = np.linalg.slogdet(a @ a.T)[1]
        base = sequential_log_dets(DataMatrix(y), 10, 50)
        moved = sequential_log_dets(DataMatrix(y @ a.T + b), 10, 50)
        np.testing.assert_allclose(moved.left - base.left, shift, atol=1e-8)
        np.testing.assert_allclose(moved.right - base.right, shift, atol=1e-8)
        assert abs((moved.full - base.full) - shift) < 1e-8


def test_split_range_floor_arithmetic():
    assert split_range(100, 0.2) == (20, 80)
    assert split_range(10, 0.3) == (3, 7)  # decimal t0 must round by intent
    assert split_range(600, 0.2) == (120, 480)
