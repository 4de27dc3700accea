"""Min-type scan over splits: statistic, decision, and location estimate.

For every admissible split m the scan evaluates twice the log likelihood
ratio comparing "one covariance" against "one covariance per segment",
centers it with the deterministic finite-sample terms, and scales it.
The test statistic is the minimum of the standardized profile; large
negative values are evidence of a change.  The location estimate is the
argmin of the centered (unscaled) profile; both extractions share one
pass but deliberately use different normalizations.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import covstream, moments, nullsim
from .covstream import DataMatrix
from .errors import AdmissibilityError, CovcpError
from .moments import KurtosisEstimate

__all__ = [
    "SplitProfile",
    "DetectorConfig",
    "McMeta",
    "DetectionReport",
    "PowerDiagnostic",
    "build_profile",
    "build_profile_noncentered",
    "min_statistic",
    "detect",
    "en_power",
]


@dataclass(frozen=True)
class SplitProfile:
    """Per-split record of the scan over ``m = floor(n*t0) ..
    floor(n*(1-t0))``.

    ``standardized = (two_log_lambda_cen - mu_tilde) / (n * sigma_nt)`` and
    ``centered_over_n = (two_log_lambda_cen - mu_tilde) / n`` hold
    entrywise.  For the raw-scan variant (``centered=False``) the same
    slots carry the raw statistic and its matching centering.
    """

    n: int
    p: int
    t0: float
    kappa_hat: float
    m: np.ndarray
    t: np.ndarray
    two_log_lambda_cen: np.ndarray
    mu_tilde: np.ndarray
    sigma_nt: np.ndarray
    standardized: np.ndarray
    centered_over_n: np.ndarray
    centered: bool = True

    def __len__(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class DetectorConfig:
    """Configuration of one detection run."""

    t0: float = 0.2
    alpha: float = 0.05
    mc_reps: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class McMeta:
    """Provenance of the simulated critical value."""

    reps: int
    seed: int
    grid_size: int
    std_error: float


@dataclass(frozen=True)
class DetectionReport:
    """Result of a full detection run.

    ``reject`` is ``statistic < quantile``; ``tau_hat`` is the estimated
    change fraction (argmin of the centered profile, ties toward the
    smallest t).
    """

    statistic: float
    quantile: float
    alpha: float
    reject: bool
    tau_hat: float
    kappa_hat: float
    profile: SplitProfile
    mc_meta: McMeta


@dataclass(frozen=True)
class PowerDiagnostic:
    """Log-determinant concavity gap driving the test's power.

    ``e_n <= 0`` always, with equality exactly when the two covariances
    coincide; the more negative, the easier the change is to detect.
    """

    e_n: float
    sigma1: np.ndarray
    sigman: np.ndarray
    t_star: float
    n: int


@contextmanager
def _stage(name: str):
    """Label library errors with the pipeline stage they escaped from."""
    try:
        yield
    except CovcpError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def _kappa_value(kappa: KurtosisEstimate | float) -> float:
    return float(getattr(kappa, "kappa_hat", kappa))


def _scan_bounds(n: int, p: int, t0: float) -> tuple[int, int]:
    m_lo, m_hi = covstream.split_range(n, t0)
    if m_lo < p + 2 or n - m_hi < p + 2:
        raise AdmissibilityError(
            f"t0={t0} is inadmissible for n={n}, p={p}: both segments need at "
            f"least p+2={p + 2} observations at the scan edges, which requires "
            f"t0 > p/n = {p / n:.6g} (got floor(n*t0)={m_lo}, "
            f"n-floor(n*(1-t0))={n - m_hi})"
        )
    return m_lo, m_hi


def _build(data: DataMatrix, t0: float, kappa: KurtosisEstimate | float,
           centered: bool) -> SplitProfile:
    n, p = data.n, data.p
    kappa_hat = _kappa_value(kappa)
    m_lo, m_hi = _scan_bounds(n, p, t0)
    if centered:
        seq = covstream.sequential_log_dets(data, m_lo, m_hi)
    else:
        seq = covstream.sequential_log_dets_noncentered(data, m_lo, m_hi)

    ms = seq.splits
    counts = ms.astype(np.float64)
    two_log_lambda = counts * seq.left + (n - counts) * seq.right - n * seq.full
    if centered:
        mu = moments.mu_tilde(n, p, ms, kappa_hat)
    else:
        mu = moments.mu_plain(n, p, ms, kappa_hat)
    sigma = moments.sigma_nt(n, p, ms)

    standardized = (two_log_lambda - mu) / (n * sigma)
    centered_over_n = (two_log_lambda - mu) / n
    return SplitProfile(
        n=n, p=p, t0=t0, kappa_hat=kappa_hat,
        m=ms, t=counts / n,
        two_log_lambda_cen=two_log_lambda,
        mu_tilde=mu, sigma_nt=sigma,
        standardized=standardized,
        centered_over_n=centered_over_n,
        centered=centered,
    )


def build_profile(data: DataMatrix, t0: float,
                  kappa: KurtosisEstimate | float) -> SplitProfile:
    """Standardized scan profile of the mean-subtracted statistic.

    Parameters
    ----------
    data : DataMatrix
    t0 : float
        Trimming fraction in (0, 1/2); must satisfy the usability bound
        ``t0 > p/n`` with margin (both scan-edge segments need p+2
        observations).
    kappa : KurtosisEstimate or float
        Innovation kurtosis plug-in used by the centering.

    Raises
    ------
    AdmissibilityError
        For an inadmissible ``t0`` (the message quotes the required
        bound).
    NotPositiveDefiniteError
        If a segment covariance fails to factor (propagated with the
        offending split).
    """
    return _build(data, t0, kappa, centered=True)


def build_profile_noncentered(data: DataMatrix, t0: float,
                              kappa: KurtosisEstimate | float) -> SplitProfile:
    """Scan profile of the raw (no mean subtraction) statistic.

    Cross-check variant: segment matrices are raw second moments and the
    centering is the matching raw-scan expression.  By exact concavity of
    the log-determinant the raw statistic is nonpositive at every split.
    """
    return _build(data, t0, kappa, centered=False)


def min_statistic(profile: SplitProfile) -> tuple[float, float]:
    """Minimum of the standardized profile and the location estimate.

    Returns ``(M, tau_hat)`` where M minimizes the standardized entries
    and ``tau_hat`` is the t at the argmin of the centered (unscaled)
    entries.  The two minimizations may select different splits; ties
    break toward the smallest t in both.
    """
    if len(profile) == 0:
        raise AdmissibilityError("cannot minimize an empty profile")
    m_value = float(profile.standardized.min())
    tau_hat = float(profile.t[int(np.argmin(profile.centered_over_n))])
    return m_value, tau_hat


def detect(data: DataMatrix, config: DetectorConfig = DetectorConfig(),
           threads: int = 1) -> DetectionReport:
    """Full detection run: estimate kurtosis, scan, simulate the critical
    value, and decide.

    The critical value is the simulated alpha-quantile of the limiting
    minimum on the same split grid, with the dimension ratio set to p/n.
    Deterministic given (data, config): repeated runs produce identical
    reports bit for bit.

    Raises
    ------
    CovcpError
        Any stage failure propagates with a stage label attached.
    """
    if not 0.0 < config.alpha < 1.0:
        raise AdmissibilityError(f"alpha must lie in (0, 1), got {config.alpha}")
    if config.mc_reps < 1000:
        raise AdmissibilityError(
            f"need at least 1000 Monte Carlo repetitions, got {config.mc_reps}"
        )
    with _stage("kurtosis"):
        kappa = moments.kurtosis_hat(data)
    with _stage("profile"):
        profile = build_profile(data, config.t0, kappa)
    statistic, tau_hat = min_statistic(profile)
    with _stage("null-quantile"):
        kg = nullsim.build_kernel_grid(data.n, data.p, config.t0)
        quantile = nullsim.simulate_min_quantile(
            kg, config.alpha, config.mc_reps, config.seed, threads=threads
        )
    return DetectionReport(
        statistic=statistic,
        quantile=quantile.q_alpha,
        alpha=config.alpha,
        reject=bool(statistic < quantile.q_alpha),
        tau_hat=tau_hat,
        kappa_hat=kappa.kappa_hat,
        profile=profile,
        mc_meta=McMeta(reps=quantile.reps, seed=quantile.seed,
                       grid_size=kg.size, std_error=quantile.std_error),
    )


def en_power(sigma1: np.ndarray, sigman: np.ndarray, t_star: float,
             n: int) -> PowerDiagnostic:
    """Concavity gap between the pre- and post-change covariances.

    Evaluates ``w*logdet(S1) + (1-w)*logdet(Sn) - logdet(w*S1 + (1-w)*Sn)``
    with ``w = floor(n*t_star)/n``.  Nonpositive by concavity of the
    log-determinant; zero exactly when the matrices coincide.

    Raises
    ------
    NotPositiveDefiniteError
        If either matrix (or the mixture) fails to factor.
    """
    if not 0.0 < t_star < 1.0:
        raise AdmissibilityError(f"t_star must lie in (0, 1), got {t_star}")
    if n < 1:
        raise AdmissibilityError(f"n must be positive, got {n}")
    s1 = np.asarray(sigma1, dtype=np.float64)
    sn = np.asarray(sigman, dtype=np.float64)
    if s1.shape != sn.shape:
        raise AdmissibilityError(
            f"covariance shapes differ: {s1.shape} vs {sn.shape}"
        )
    w = int(np.floor(n * t_star + 1e-9)) / n
    e_n = (
        w * covstream.log_det_spd(s1)
        + (1.0 - w) * covstream.log_det_spd(sn)
        - covstream.log_det_spd(w * s1 + (1.0 - w) * sn)
    )
    return PowerDiagnostic(e_n=float(e_n), sigma1=s1, sigman=sn,
                           t_star=t_star, n=n)
