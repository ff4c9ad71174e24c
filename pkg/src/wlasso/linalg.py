"""Dense symmetric linear algebra: spectral decomposition and matrix powers.

The whitening transform needs a factor pair (C^{1/2}, C^{-1/2}) obtained from a
single eigendecomposition of a correlation matrix estimate.  Estimated block
matrices can be singular or slightly indefinite, so eigenvalues are floored
before taking the +/-1/2 powers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, NonSymmetricError, NumericalFailureError

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SpectralFactorization:
    """Eigendecomposition m = U diag(d) U^T with eigenvalues sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class WhiteningOperator:
    """Square root and inverse square root of a (repaired) symmetric matrix.

    Attributes
    ----------
    sqrt : ndarray
        Symmetric square root of the repaired matrix.
    inv_sqrt : ndarray
        Symmetric inverse square root.
    min_eigenvalue : float
        Smallest eigenvalue after flooring; always > 0.
    clipped : bool
        True when at least one eigenvalue had to be raised to the floor.
    """

    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    min_eigenvalue: float
    clipped: bool


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSymmetricError(f"expected a square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NonSymmetricError(f"matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}")
    # absorb floating-point drift from upstream averaging
    return 0.5 * (m + m.T)


def spectral_decompose(m: np.ndarray) -> SpectralFactorization:
    """Eigendecompose a symmetric matrix, eigenvalues sorted descending.

    Raises
    ------
    NonSymmetricError
        If the asymmetry exceeds 1e-10 (max absolute entry).
    NumericalFailureError
        If the eigensolver does not converge.
    """
    m = _check_symmetric(m)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigenvalues)[::-1]
    return SpectralFactorization(
        eigenvalues=eigenvalues[order], eigenvectors=eigenvectors[:, order]
    )


def whitening_operator(m: np.ndarray, eig_floor: float | None = None) -> WhiteningOperator:
    """Build the (C^{1/2}, C^{-1/2}) pair via U D^{+/-1/2} U^T.

    Eigenvalues below ``eig_floor`` (default 1e-8 times the largest eigenvalue)
    are clipped to the floor before taking powers, which keeps the inverse
    square root finite for singular or slightly indefinite estimates.

    Raises
    ------
    DegenerateMatrixError
        If every eigenvalue falls below the floor.
    """
    fac = spectral_decompose(m)
    d = fac.eigenvalues
    if eig_floor is None:
        lam_max = float(d[0])
        if lam_max <= 0.0:
            raise DegenerateMatrixError("largest eigenvalue is non-positive")
        eig_floor = 1e-8 * lam_max
    if eig_floor <= 0.0:
        raise ValueError("eig_floor must be positive")
    if np.all(d < eig_floor):
        raise DegenerateMatrixError("all eigenvalues fall below the floor")
    clipped = bool(np.any(d < eig_floor))
    d_rep = np.maximum(d, eig_floor)
    u = fac.eigenvectors
    sqrt_d = np.sqrt(d_rep)
    sqrt = (u * sqrt_d) @ u.T
    inv_sqrt = (u / sqrt_d) @ u.T
    return WhiteningOperator(
        sqrt=0.5 * (sqrt + sqrt.T),
        inv_sqrt=0.5 * (inv_sqrt + inv_sqrt.T),
        min_eigenvalue=float(d_rep[-1]),
        clipped=clipped,
    )
