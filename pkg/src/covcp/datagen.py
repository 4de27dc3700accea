"""Synthetic data for the simulation harness.

Generates sequences whose covariance switches at a prescribed fraction of
the sample: identity before the change, and after it either a diagonal
matrix with an inflated trailing block or a random rotation of that
matrix with the same spectrum.  Innovations are standard normal or
standardized uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covstream import DataMatrix
from .errors import DataValidationError

__all__ = ["SyntheticModel", "haar_orthogonal", "generate"]

_INNOVATIONS = ("gaussian", "uniform", "uniform_raw")

# Guard for floor(n * t_star) when t_star has no exact binary
# representation; mirrors covstream.split_range.
_FLOOR_GUARD = 1e-9


@dataclass(frozen=True)
class SyntheticModel:
    """Design of one synthetic experiment.

    The first ``floor(n * t_star)`` observations have identity covariance;
    the rest have eigenvalues (1, ..., 1, delta, ..., delta) with the
    inflated block filling the trailing p/2 coordinates.  With
    ``rotation=True`` (and delta > 1) the post-change covariance is
    conjugated by a uniformly random orthogonal matrix; at delta = 1 the
    rotation is the identity and both variants coincide with the
    no-change case.

    ``innovation`` is one of "gaussian", "uniform" (uniform rescaled to
    mean 0 and variance 1, the default reading), or "uniform_raw"
    (untouched U(0,1) draws, kept for sensitivity checks).
    """

    n: int
    p: int
    t_star: float
    delta: float
    rotation: bool = False
    innovation: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise DataValidationError(f"dimension must be positive, got p={self.p}")
        if self.delta > 1.0 and self.p % 2 != 0:
            raise DataValidationError(
                f"the inflated block fills p/2 coordinates, so p must be even "
                f"when delta > 1; got p={self.p}"
            )
        if not 0.0 < self.t_star < 1.0:
            raise DataValidationError(
                f"change fraction must lie in (0, 1), got t_star={self.t_star}"
            )
        m_star = int(np.floor(self.n * self.t_star + _FLOOR_GUARD))
        if not 0 < m_star < self.n:
            raise DataValidationError(
                f"change index floor(n*t_star)={m_star} must lie strictly "
                f"inside 1..{self.n - 1}"
            )
        if self.delta < 1.0:
            raise DataValidationError(f"delta must be >= 1, got {self.delta}")
        if self.innovation not in _INNOVATIONS:
            raise DataValidationError(
                f"innovation must be one of {_INNOVATIONS}, got {self.innovation!r}"
            )

    @property
    def change_index(self) -> int:
        """Last observation index before the change, floor(n * t_star)."""
        return int(np.floor(self.n * self.t_star + _FLOOR_GUARD))


def haar_orthogonal(p: int, seed: int) -> np.ndarray:
    """Draw a p x p orthogonal matrix uniformly from the orthogonal group.

    QR factorization of an i.i.d. standard Gaussian matrix with the sign
    fix that multiplies column j of Q by the sign of the j-th diagonal
    entry of R, which makes the factorization unique and the law exactly
    Haar.
    """
    rng = np.random.default_rng(seed)
    return _haar(rng, p)


def _haar(rng: np.random.Generator, p: int) -> np.ndarray:
    g = rng.standard_normal((p, p))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0  # measure-zero guard
    return q * signs


def generate(model: SyntheticModel) -> DataMatrix:
    """Generate one synthetic sample.

    Deterministic for a fixed ``model.seed``: the rotation (when drawn) is
    consumed from the stream first, then the innovation matrix, so the
    unrotated and rotated variants share innovations at equal seeds.
    """
    rng = np.random.default_rng(model.seed)
    n, p = model.n, model.p
    m_star = model.change_index

    eigenvalues = np.ones(p)
    eigenvalues[p // 2:] = model.delta

    rotation = None
    if model.rotation and model.delta > 1.0:
        rotation = _haar(rng, p)

    if model.innovation == "gaussian":
        x = rng.standard_normal((n, p))
    else:
        x = rng.random((n, p))
        if model.innovation == "uniform":
            x = np.sqrt(12.0) * (x - 0.5)

    y = x.copy()
    if rotation is None:
        y[m_star:] = x[m_star:] * np.sqrt(eigenvalues)
    else:
        # symmetric square root with the prescribed spectrum
        sqrt_post = (rotation * np.sqrt(eigenvalues)) @ rotation.T
        y[m_star:] = x[m_star:] @ sqrt_post
    return DataMatrix(y)
