"""Monte Carlo simulation of the limiting Gaussian process of the scan.

Under no change, the standardized scan converges to the minimum of a
centered Gaussian process Z(t) / sqrt(sigma(t, t)) over the trimmed
interval, with an explicit covariance kernel depending only on the
dimension ratio y.  Critical values are obtained by simulating that
minimum on the same split grid the detector scans, with y set to p/n.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covstream import split_range
from .errors import AdmissibilityError, NumericalDegeneracyError

__all__ = [
    "KernelGrid",
    "QuantileEstimate",
    "kernel_sigma",
    "build_kernel_grid",
    "simulate_min_quantile",
]

# Fixed block size for path generation: per-block RNG substreams are keyed
# by (seed, block index), so serial and worker-parallel execution produce
# identical minima in identical order.
_BLOCK = 8192

_JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass(frozen=True)
class KernelGrid:
    """Kernel of the limiting process evaluated on a split grid.

    ``cov[a, b]`` holds the kernel at ``(grid[a], grid[b])`` with dimension
    ratio ``y``; ``chol`` is a lower-triangular factor of ``cov`` plus
    ``jitter_used`` times the identity (the smallest rung of the jitter
    ladder that factors).  Immutable after construction.
    """

    y: float
    splits: np.ndarray  # integer split indices m
    grid: np.ndarray    # t = m / n, ascending
    cov: np.ndarray
    chol: np.ndarray
    jitter_used: float

    @property
    def size(self) -> int:
        return self.grid.shape[0]


@dataclass(frozen=True)
class QuantileEstimate:
    """Empirical lower quantile of the simulated minima.

    ``q_alpha`` is the order statistic at (1-based) rank
    ``ceil(alpha * reps)``; ``std_error`` is the asymptotic order-statistic
    standard error ``sqrt(alpha*(1-alpha)/reps)`` divided by a
    finite-difference density estimate at the quantile.
    """

    q_alpha: float
    alpha: float
    reps: int
    std_error: float
    seed: int


def kernel_sigma(t1: float, t2: float, y: float) -> float:
    """Covariance kernel of the limiting process at time pair (t1, t2).

    The arguments are ordered internally so the kernel is symmetric by
    construction.  Requires ``0 < y < min(t1, 1 - t2)`` after ordering;
    each logarithm's argument is checked and named on violation.

    Raises
    ------
    AdmissibilityError
        If ``y <= 0`` or any log argument is nonpositive.
    """
    lo, hi = (t1, t2) if t1 <= t2 else (t2, t1)
    if y <= 0.0:
        raise AdmissibilityError(f"dimension ratio must be positive, got y={y}")
    if not 0.0 < lo <= hi < 1.0:
        raise AdmissibilityError(
            f"kernel times must lie in (0, 1), got (t1={lo}, t2={hi})"
        )
    terms = {
        "1 - y": -y,
        "1 - y/t2": -y / hi if hi > 0 else -math.inf,
        "1 - (t2-t1)*y/((1-t1)*t2)": (
            -(hi - lo) * y / ((1.0 - lo) * hi)
            if lo < 1.0 and hi > 0 else -math.inf
        ),
        "1 - y/(1-t1)": -y / (1.0 - lo) if lo < 1.0 else -math.inf,
    }
    for name, arg in terms.items():
        if not arg > -1.0:
            raise AdmissibilityError(
                f"kernel log argument {name} is nonpositive at "
                f"(t1={lo}, t2={hi}, y={y})"
            )
    return (
        2.0 * math.log1p(terms["1 - y"])
        - 2.0 * lo * hi * math.log1p(terms["1 - y/t2"])
        - 2.0 * (1.0 - lo) * hi * math.log1p(terms["1 - (t2-t1)*y/((1-t1)*t2)"])
        - 2.0 * (1.0 - lo) * (1.0 - hi) * math.log1p(terms["1 - y/(1-t1)"])
    )


def _kernel_matrix(ts: np.ndarray, y: float) -> np.ndarray:
    """Kernel evaluated on all grid pairs at once (domain pre-validated)."""
    t1 = np.minimum.outer(ts, ts)
    t2 = np.maximum.outer(ts, ts)
    return (
        2.0 * math.log1p(-y)
        - 2.0 * t1 * t2 * np.log1p(-y / t2)
        - 2.0 * (1.0 - t1) * t2 * np.log1p(-(t2 - t1) * y / ((1.0 - t1) * t2))
        - 2.0 * (1.0 - t1) * (1.0 - t2) * np.log1p(-y / (1.0 - t1))
    )


def build_kernel_grid(n: int, p: int, t0: float) -> KernelGrid:
    """Kernel grid aligned with the detector's split grid for (n, p, t0).

    Grid points are ``m/n`` for every split m the detector scans and the
    dimension ratio is ``p/n``.  The kernel matrix is factored with an
    escalating diagonal jitter ladder (0, 1e-12, 1e-10, 1e-8): the kernel
    is positive semidefinite analytically, but fine grids can acquire tiny
    negative eigenvalues in finite precision.

    Raises
    ------
    AdmissibilityError
        If the kernel domain is violated at a grid edge (requires
        ``floor(n*t0) > p`` and ``n - floor(n*(1-t0)) > p``).
    NumericalDegeneracyError
        If factorization still fails at the largest jitter.
    """
    m_lo, m_hi = split_range(n, t0)
    if m_lo <= p or n - m_hi <= p:
        raise AdmissibilityError(
            f"kernel domain violated at the grid edge: need floor(n*t0) > p and "
            f"n - floor(n*(1-t0)) > p, got m_lo={m_lo}, m_hi={m_hi} (n={n}, p={p})"
        )
    splits = np.arange(m_lo, m_hi + 1, dtype=np.int64)
    grid = splits / float(n)
    y = p / float(n)
    cov = _kernel_matrix(grid, y)
    chol, jitter = _factor_with_jitter(cov)
    return KernelGrid(y=y, splits=splits, grid=grid, cov=cov, chol=chol,
                      jitter_used=jitter)


def _factor_with_jitter(cov: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor of ``cov + jitter*I`` for the smallest workable rung
    of the jitter ladder."""
    eye = np.eye(cov.shape[0])
    for jitter in _JITTER_LADDER:
        try:
            chol = np.linalg.cholesky(cov + jitter * eye if jitter else cov)
        except np.linalg.LinAlgError:
            continue
        return chol, jitter
    raise NumericalDegeneracyError(
        f"kernel matrix failed to factor at maximum jitter "
        f"{_JITTER_LADDER[-1]} (grid size {cov.shape[0]})"
    )


def _quantile_rank(alpha: float, reps: int) -> int:
    """1-based order statistic ceil(alpha * reps), clamped to [1, reps].

    The small guard absorbs binary representation error of decimal alpha
    (0.05 * 200000 must give rank 10000, not 10001).
    """
    return min(max(int(math.ceil(alpha * reps - 1e-9)), 1), reps)


def _block_minima(kg: KernelGrid, scale: np.ndarray, seed: int, block: int,
                  count: int) -> np.ndarray:
    """Minima of ``count`` standardized paths from block-keyed substream."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    g = rng.standard_normal((count, kg.chol.shape[0]))
    paths = g @ kg.chol.T
    return (paths / scale).min(axis=1)


def simulate_min_quantile(kg: KernelGrid, alpha: float, reps: int, seed: int,
                          threads: int = 1) -> QuantileEstimate:
    """Empirical alpha-quantile of the simulated standardized minimum.

    Draws ``reps`` independent paths of the limiting process on the grid,
    standardizes each coordinate by the square root of the kernel
    diagonal, takes the per-path minimum, and returns the lower (no
    interpolation) empirical quantile.

    Paths are generated in fixed-size blocks whose RNG substreams are
    keyed by (seed, block index), and the minima are concatenated in block
    order, so the result is bit-identical for a given seed regardless of
    ``threads``.

    Parameters
    ----------
    kg : KernelGrid
    alpha : float
        Quantile level in (0, 1).
    reps : int
        Number of simulated paths, at least 1000.
    seed : int
        RNG seed.
    threads : int, optional
        Worker threads for block generation; values below 2 run serially.
    """
    if not 0.0 < alpha < 1.0:
        raise AdmissibilityError(f"alpha must lie in (0, 1), got {alpha}")
    if reps < 1000:
        raise AdmissibilityError(f"need at least 1000 repetitions, got {reps}")

    scale = np.sqrt(np.diagonal(kg.cov))
    n_blocks = (reps + _BLOCK - 1) // _BLOCK
    counts = [min(_BLOCK, reps - b * _BLOCK) for b in range(n_blocks)]

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(
                lambda b: _block_minima(kg, scale, seed, b, counts[b]),
                range(n_blocks),
            ))
    else:
        chunks = [_block_minima(kg, scale, seed, b, counts[b])
                  for b in range(n_blocks)]
    minima = np.sort(np.concatenate(chunks))
    rank = _quantile_rank(alpha, reps)
    q = float(minima[rank - 1])

    half = max(1, int(round(math.sqrt(reps))))
    lo = max(0, rank - 1 - half)
    hi = min(reps - 1, rank - 1 + half)
    width = float(minima[hi] - minima[lo])
    base = math.sqrt(alpha * (1.0 - alpha) / reps)
    std_error = base * width * reps / (hi - lo) if width > 0.0 else 0.0

    return QuantileEstimate(q_alpha=q, alpha=alpha, reps=reps,
                            std_error=std_error, seed=seed)
