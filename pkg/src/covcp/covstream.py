"""Sequential sample covariance matrices and their log-determinants.

The change-point scan evaluates, for every admissible split ``m``, the
covariance matrix of the first ``m`` observations and of the remaining
``n - m`` observations.  Recomputing each segment from scratch costs
O(n p^2) per split; this module instead accumulates cumulative first and
second moments over observation prefixes once, after which any segment
covariance is assembled from two prefix records in O(p^2), followed by a
single O(p^3) factorization.

All covariances here use the mean-subtracted convention with divisor
``count - 1`` for a segment of ``count`` observations; the raw
second-moment variant (no mean subtraction, divisor ``count``) used by the
cross-check scan is provided alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dpotrf

from .errors import (
    AdmissibilityError,
    DataValidationError,
    InvalidSegmentError,
    NotPositiveDefiniteError,
)

__all__ = [
    "DataMatrix",
    "PrefixMoments",
    "SegmentCovariance",
    "SequentialLogDets",
    "build_prefix_moments",
    "segment_covariance",
    "log_det_spd",
    "sequential_log_dets",
    "sequential_log_dets_noncentered",
    "split_range",
]


@dataclass(frozen=True)
class DataMatrix:
    """Observation matrix with one row per observation.

    Parameters
    ----------
    values : array_like, shape (n, p)
        Rows are observations, columns are coordinates.  Coerced to a
        C-contiguous float64 array.

    Raises
    ------
    DataValidationError
        If the array is not 2-dimensional, has fewer than 3 rows or 1
        column, or contains a non-finite entry (the error names the first
        offending row/column pair).
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if arr.ndim != 2:
            raise DataValidationError(
                f"expected a 2-dimensional observation matrix, got ndim={arr.ndim}"
            )
        n, p = arr.shape
        if n < 3:
            raise DataValidationError(f"need at least 3 observations, got n={n}")
        if p < 1:
            raise DataValidationError(f"need at least 1 coordinate, got p={p}")
        if not np.isfinite(arr).all():
            i, j = np.argwhere(~np.isfinite(arr))[0]
            raise DataValidationError(
                f"non-finite entry {arr[i, j]!r} at row {i + 1}, column {j + 1}"
            )
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def ratio(self) -> float:
        """Dimension-to-sample-size ratio p/n."""
        return self.values.shape[1] / self.values.shape[0]


@dataclass(frozen=True)
class PrefixMoments:
    """Cumulative moments over observation prefixes.

    ``cum_outer[m]`` is the sum of outer products of the first ``m``
    observations and ``cum_sum[m]`` their plain sum, with index 0 holding
    zeros, so any contiguous segment's moments are differences of two
    entries.  Immutable after construction and safe to share across
    workers.
    """

    cum_outer: np.ndarray  # (n + 1, p, p)
    cum_sum: np.ndarray    # (n + 1, p)

    @property
    def n(self) -> int:
        return self.cum_sum.shape[0] - 1

    @property
    def p(self) -> int:
        return self.cum_sum.shape[1]


@dataclass(frozen=True)
class SegmentCovariance:
    """Mean-subtracted sample covariance of observations ``start..end``
    (1-based, inclusive), normalized by ``divisor = end - start``."""

    matrix: np.ndarray
    start: int
    end: int
    divisor: int


@dataclass(frozen=True)
class SequentialLogDets:
    """Log-determinants of the left/right segment covariances at each split.

    ``splits[k]`` is the split index m, ``left[k]`` the log-determinant of
    the covariance of observations ``1..m``, ``right[k]`` that of
    ``m+1..n``; ``full`` is the log-determinant of the whole-sample
    covariance, computed once.
    """

    splits: np.ndarray
    left: np.ndarray
    right: np.ndarray
    full: float

    def __len__(self) -> int:
        return self.splits.shape[0]

    def __iter__(self):
        return zip(self.splits.tolist(), self.left.tolist(), self.right.tolist())


def build_prefix_moments(data: DataMatrix) -> PrefixMoments:
    """Accumulate cumulative outer products and sums over prefixes.

    Parameters
    ----------
    data : DataMatrix
        Validated observation matrix (finite entries guaranteed by the
        ``DataMatrix`` constructor).

    Returns
    -------
    PrefixMoments
    """
    y = data.values
    n, p = y.shape
    cum_outer = np.zeros((n + 1, p, p))
    np.cumsum(np.einsum("ki,kj->kij", y, y), axis=0, out=cum_outer[1:])
    cum_sum = np.zeros((n + 1, p))
    np.cumsum(y, axis=0, out=cum_sum[1:])
    return PrefixMoments(cum_outer=cum_outer, cum_sum=cum_sum)


def segment_covariance(moments: PrefixMoments, i: int, j: int) -> SegmentCovariance:
    """Mean-subtracted covariance of observations ``i..j`` from prefix moments.

    Equals ``sum_k (y_k - ybar)(y_k - ybar)^T / (j - i)`` over the segment,
    with ``ybar`` the segment mean.  The result is explicitly symmetrized
    to guard against accumulation asymmetry.

    Parameters
    ----------
    moments : PrefixMoments
    i, j : int
        1-based inclusive segment bounds with ``1 <= i < j <= n``.

    Raises
    ------
    InvalidSegmentError
        If ``i >= j`` or the bounds fall outside ``1..n``.
    """
    n = moments.n
    if i >= j:
        raise InvalidSegmentError(f"segment needs i < j, got i={i}, j={j}")
    if i < 1 or j > n:
        raise InvalidSegmentError(f"segment [{i}, {j}] outside observations 1..{n}")
    count = j - i + 1
    s_mat = moments.cum_outer[j] - moments.cum_outer[i - 1]
    s_vec = moments.cum_sum[j] - moments.cum_sum[i - 1]
    cov = (s_mat - np.outer(s_vec, s_vec) / count) / (j - i)
    cov = 0.5 * (cov + cov.T)
    return SegmentCovariance(matrix=cov, start=i, end=j, divisor=j - i)


def log_det_spd(matrix: np.ndarray) -> float:
    """Log-determinant of a symmetric positive definite matrix.

    Uses a lower-triangular Cholesky factorization, so the value equals
    the sum of the logarithms of the eigenvalues.

    Raises
    ------
    NotPositiveDefiniteError
        If a non-positive pivot is hit; ``pivot`` carries the 1-based
        index of the failing leading minor.  Callers scanning data
        segments interpret this as a rank-deficient segment.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataValidationError(f"expected a square matrix, got shape {a.shape}")
    c, info = dpotrf(a, lower=1)
    if info != 0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (leading minor of order {info})",
            pivot=int(info),
        )
    return float(2.0 * np.log(np.diagonal(c)).sum())


def split_range(n: int, t0: float) -> tuple[int, int]:
    """Split-index range ``floor(n*t0) .. floor(n*(1-t0))`` scanned by the
    detector and mirrored by the null simulation grid.

    A small additive guard absorbs the binary representation error of
    decimal ``t0`` values (e.g. n=10, t0=0.3 must give 3, not 2).
    """
    if not 0.0 < t0 < 0.5:
        raise AdmissibilityError(f"t0 must lie in (0, 0.5), got {t0}")
    m_lo = int(math.floor(n * t0 + 1e-9))
    m_hi = int(math.floor(n * (1.0 - t0) + 1e-9))
    return m_lo, m_hi


def _cholesky_pivot(a: np.ndarray) -> int:
    """1-based index of the first failing pivot, 0 if the matrix factors."""
    _, info = dpotrf(a, lower=1)
    return int(info)


def _logdets_spd_batch(mats: np.ndarray, splits: np.ndarray, side: str) -> np.ndarray:
    """Log-determinants of a stack of SPD matrices, localizing failures.

    The fast path factors the whole stack at once; only when that fails is
    a per-split scan run to name the offending m in the error.
    """
    try:
        chol = np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        for m, a in zip(splits.tolist(), mats):
            info = _cholesky_pivot(a)
            if info > 0:
                raise NotPositiveDefiniteError(
                    f"{side} segment covariance at split m={m} is not positive "
                    f"definite (leading minor of order {info})",
                    pivot=info,
                ) from None
        raise
    diag = np.diagonal(chol, axis1=1, axis2=2)
    return 2.0 * np.log(diag).sum(axis=1)


def _symmetrize_stack(mats: np.ndarray) -> np.ndarray:
    return 0.5 * (mats + mats.transpose(0, 2, 1))


def _segment_covariances(moments: PrefixMoments, splits: np.ndarray,
                         centered: bool) -> tuple[np.ndarray, np.ndarray]:
    """Stacks of left (1..m) and right (m+1..n) segment covariances."""
    n = moments.n
    left_counts = splits.astype(np.float64)
    right_counts = float(n) - left_counts

    s_mat_l = moments.cum_outer[splits]
    s_vec_l = moments.cum_sum[splits]
    s_mat_r = moments.cum_outer[n] - s_mat_l
    s_vec_r = moments.cum_sum[n] - s_vec_l

    if centered:
        left = s_mat_l - s_vec_l[:, :, None] * s_vec_l[:, None, :] / left_counts[:, None, None]
        left /= (left_counts - 1.0)[:, None, None]
        right = s_mat_r - s_vec_r[:, :, None] * s_vec_r[:, None, :] / right_counts[:, None, None]
        right /= (right_counts - 1.0)[:, None, None]
    else:
        left = s_mat_l / left_counts[:, None, None]
        right = s_mat_r / right_counts[:, None, None]
    return _symmetrize_stack(left), _symmetrize_stack(right)


def _full_covariance(moments: PrefixMoments, centered: bool) -> np.ndarray:
    n = moments.n
    if centered:
        return segment_covariance(moments, 1, n).matrix
    full = moments.cum_outer[n] / float(n)
    return 0.5 * (full + full.T)


def _sequential_log_dets(data: DataMatrix, m_lo: int, m_hi: int,
                         centered: bool) -> SequentialLogDets:
    n, p = data.n, data.p
    moments = build_prefix_moments(data)
    full = log_det_spd(_full_covariance(moments, centered))
    if m_lo > m_hi:
        empty = np.empty(0)
        return SequentialLogDets(splits=np.empty(0, dtype=np.int64),
                                 left=empty, right=empty, full=full)
    if m_lo < p + 2 or m_hi > n - p - 2:
        raise AdmissibilityError(
            f"split range [{m_lo}, {m_hi}] leaves a segment shorter than p+2="
            f"{p + 2} observations (n={n}, p={p})"
        )
    splits = np.arange(m_lo, m_hi + 1, dtype=np.int64)
    left_cov, right_cov = _segment_covariances(moments, splits, centered)
    left = _logdets_spd_batch(left_cov, splits, "left")
    right = _logdets_spd_batch(right_cov, splits, "right")
    return SequentialLogDets(splits=splits, left=left, right=right, full=full)


def sequential_log_dets(data: DataMatrix, m_lo: int, m_hi: int) -> SequentialLogDets:
    """Mean-subtracted segment log-determinants for every split in
    ``[m_lo, m_hi]``.

    For each split m the left segment is ``1..m`` and the right segment
    ``m+1..n``; the whole-sample log-determinant is computed once and
    returned alongside.  An empty range (``m_lo > m_hi``) yields empty
    arrays.  Disjoint ranges may be evaluated concurrently; nothing here
    mutates shared state.

    Raises
    ------
    AdmissibilityError
        If a nonempty range would touch a segment shorter than p+2.
    NotPositiveDefiniteError
        If some segment covariance fails to factor; the message names the
        offending split.
    """
    return _sequential_log_dets(data, m_lo, m_hi, centered=True)


def sequential_log_dets_noncentered(data: DataMatrix, m_lo: int,
                                    m_hi: int) -> SequentialLogDets:
    """Raw second-moment variant of :func:`sequential_log_dets`.

    Segment matrices are ``sum_k y_k y_k^T / count`` without mean
    subtraction; used by the cross-check scan.
    """
    return _sequential_log_dets(data, m_lo, m_hi, centered=False)
