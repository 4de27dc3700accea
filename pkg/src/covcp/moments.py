"""Kurtosis estimation and the deterministic centering/scale of the scan.

The standardized scan statistic at split m is
``(two_log_lambda(m) - mu_tilde(m)) / (n * sigma_nt(m))``.  The centering
``mu_tilde`` and scale ``sigma_nt`` are pure functions of (n, p, m) plus a
plug-in kurtosis estimate of the unobserved standardized innovations;
they never touch the data.  ``mu_plain`` is the matching centering for
the raw (no mean subtraction) scan used as an internal cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covstream import DataMatrix
from .errors import AdmissibilityError, DegenerateDataError

__all__ = [
    "KurtosisEstimate",
    "CenteringTerms",
    "kurtosis_hat",
    "mu_tilde",
    "sigma_nt",
    "sigma_nt_squared",
    "mu_plain",
    "centering_terms",
    "substitution_gap",
]


@dataclass(frozen=True)
class KurtosisEstimate:
    """Plug-in kurtosis estimate with its three ingredients.

    ``kappa_hat = max(3 + (nu_hat - 2*tau_hat) / omega_hat, 1)`` where
    ``tau_hat`` estimates the squared Frobenius norm of the population
    covariance, ``nu_hat`` the variance of the centered squared norms, and
    ``omega_hat`` the sum of squared per-coordinate variances.
    """

    kappa_hat: float
    tau_hat: float
    nu_hat: float
    omega_hat: float


@dataclass(frozen=True)
class CenteringTerms:
    """Centering and scale of the scan statistic at one split."""

    m: int
    mu_tilde: float
    sigma_nt: float
    mu_plain: float


def kurtosis_hat(data: DataMatrix) -> KurtosisEstimate:
    """Estimate the fourth moment of the standardized innovations.

    All three ingredients are computed from the full sample: the squared
    norms use the full-sample mean for centering, the covariance uses
    divisor n-1, and the per-coordinate variances use divisor n.  The
    final estimate is clamped below at 1.

    Raises
    ------
    DegenerateDataError
        If every coordinate is constant (the denominator vanishes).
    """
    y = data.values
    n = data.n
    centered = y - y.mean(axis=0)

    coord_var = np.mean(centered**2, axis=0)  # biased, divisor n
    omega = float(np.sum(coord_var**2))
    if omega == 0.0:
        raise DegenerateDataError(
            "all coordinates are constant; kurtosis is undefined"
        )

    cov = centered.T @ centered / (n - 1)
    tau = float(np.sum(cov * cov) - np.trace(cov) ** 2 / n)

    sq_norms = np.sum(centered**2, axis=1)
    nu = float(np.var(sq_norms, ddof=1))

    kappa = max(3.0 + (nu - 2.0 * tau) / omega, 1.0)
    return KurtosisEstimate(kappa_hat=kappa, tau_hat=tau, nu_hat=nu, omega_hat=omega)


def _check_split(n: int, p: int, m, margin: int) -> None:
    """Require m >= p+margin and n-m >= p+margin, naming the violation."""
    m_arr = np.asarray(m)
    bad_left = m_arr < p + margin
    if np.any(bad_left):
        worst = int(np.asarray(m_arr)[bad_left].min()) if m_arr.ndim else int(m_arr)
        raise AdmissibilityError(
            f"left segment too short at split m={worst}: need m >= p+{margin}"
            f"={p + margin} (n={n}, p={p})"
        )
    bad_right = n - m_arr < p + margin
    if np.any(bad_right):
        worst = int(np.asarray(m_arr)[bad_right].max()) if m_arr.ndim else int(m_arr)
        raise AdmissibilityError(
            f"right segment too short at split m={worst}: need n-m >= p+{margin}"
            f"={p + margin} (n={n}, p={p})"
        )


def _as_result(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


def mu_tilde(n: int, p: int, m, kappa_hat: float):
    """Finite-sample centering of the mean-subtracted scan at split m.

    Accepts a scalar split index or an array of them.  Symmetric in
    ``m <-> n - m`` (for fixed kurtosis) and a pure function of its
    arguments.

    Raises
    ------
    AdmissibilityError
        Unless ``m >= p+2`` and ``n-m >= p+2`` (the three log arguments
        must be strictly positive); the message names the violated
        segment.
    """
    scalar = np.ndim(m) == 0
    _check_split(n, p, m, margin=2)
    mm = np.asarray(m, dtype=np.float64)
    nn, pp = float(n), float(p)
    val = (
        nn * (nn - pp - 1.5) * math.log1p(-pp / (nn - 1.0))
        - mm * (mm - pp - 1.5) * np.log1p(-pp / (mm - 1.0))
        - (nn - mm) * (nn - mm - pp - 1.5) * np.log1p(-pp / (nn - mm - 1.0))
        + 0.5 * (float(kappa_hat) - 3.0) * pp
    )
    return _as_result(val, scalar)


def sigma_nt_squared(n: int, p: int, m):
    """Squared scale of the scan statistic at split m (scalar or array).

    Positive whenever ``m > p`` and ``n - m > p``.
    """
    scalar = np.ndim(m) == 0
    _check_split(n, p, m, margin=1)
    mm = np.asarray(m, dtype=np.float64)
    nn, pp = float(n), float(p)
    t = mm / nn
    val = (
        2.0 * math.log1p(-pp / nn)
        - 2.0 * t**2 * np.log1p(-pp / mm)
        - 2.0 * (1.0 - t) ** 2 * np.log1p(-pp / (nn - mm))
    )
    if np.any(val <= 0.0):
        raise AdmissibilityError(
            f"scan scale is not positive at some split in m={m!r} (n={n}, p={p})"
        )
    return _as_result(val, scalar)


def sigma_nt(n: int, p: int, m):
    """Scale of the scan statistic at split m: the positive square root of
    :func:`sigma_nt_squared`."""
    return np.sqrt(sigma_nt_squared(n, p, m))


def mu_plain(n: int, p: int, m, kappa_hat: float):
    """Centering for the raw (no mean subtraction) scan at split m.

    Same structure as :func:`mu_tilde` with offsets 1/2 instead of 3/2 and
    log arguments ``1 - p/n``, ``1 - p/m``, ``1 - p/(n-m)``; admissible
    whenever ``m > p`` and ``n - m > p``.
    """
    scalar = np.ndim(m) == 0
    _check_split(n, p, m, margin=1)
    mm = np.asarray(m, dtype=np.float64)
    nn, pp = float(n), float(p)
    val = (
        nn * (nn - pp - 0.5) * math.log1p(-pp / nn)
        - mm * (mm - pp - 0.5) * np.log1p(-pp / mm)
        - (nn - mm) * (nn - mm - pp - 0.5) * np.log1p(-pp / (nn - mm))
        + 0.5 * (float(kappa_hat) - 3.0) * pp
    )
    return _as_result(val, scalar)


def centering_terms(n: int, p: int, m: int, kappa_hat: float) -> CenteringTerms:
    """Bundle of all three deterministic terms at a single split."""
    return CenteringTerms(
        m=int(m),
        mu_tilde=mu_tilde(n, p, m, kappa_hat),
        sigma_nt=sigma_nt(n, p, m),
        mu_plain=mu_plain(n, p, m, kappa_hat),
    )


def substitution_gap(n: int, p: int, m: int | None = None) -> float:
    """Discrepancy between the mean-subtracted and raw centerings.

    The raw scan's centering, corrected by the deterministic terms that
    relate the two scans,

        mu_plain/n + (m/n)*log(1-p/m) + ((n-m)/n)*log(1-p/(n-m))
                   - log(1-p/n) + p/n,

    agrees with ``mu_tilde/n`` up to a term that vanishes as n grows with
    p/n fixed.  This returns the absolute difference (the kurtosis term is
    identical on both sides and cancels).  Defaults to the central split
    ``m = n // 2``.
    """
    mm = n // 2 if m is None else int(m)
    nn, pp = float(n), float(p)
    corr = (
        (mm / nn) * math.log1p(-pp / mm)
        + ((nn - mm) / nn) * math.log1p(-pp / (nn - mm))
        - math.log1p(-pp / nn)
        + pp / nn
    )
    return abs(mu_plain(n, p, mm, 3.0) / nn + corr - mu_tilde(n, p, mm, 3.0) / nn)
