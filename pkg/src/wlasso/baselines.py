"""Baseline selectors: plain Lasso supports and the minimum-norm projection
estimator b = X^T (X X^T)^{-1} y with Top-s selection."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidSError, SingularGramError
from .solver import LambdaGrid, lasso_path

GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class SelectorOutput:
    """Selected supports and coefficients per sparsity-control value."""

    levels: np.ndarray
    selected_per_level: list[np.ndarray]
    coefficients_per_level: np.ndarray


def lasso_select(
    X: np.ndarray, y: np.ndarray, grid: LambdaGrid, tol: float = 1e-7, max_iter: int = 10_000
) -> SelectorOutput:
    """Supports of the Lasso path across the grid."""
    path = lasso_path(X, y, grid, tol=tol, max_iter=max_iter)
    supports = [np.flatnonzero(b) for b in path.coefficients]
    return SelectorOutput(
        levels=grid.values,
        selected_per_level=supports,
        coefficients_per_level=path.coefficients,
    )


def holp_estimate(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimum-norm interpolator X^T (X X^T)^{-1} y via a symmetric solve.

    Raises
    ------
    SingularGramError
        If X X^T has an eigenvalue ratio beyond 1e12 (rank-deficient rows).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    gram = X @ X.T
    eigvals = np.linalg.eigvalsh(gram)
    if eigvals[0] <= 0.0 or eigvals[-1] / eigvals[0] > GRAM_CONDITION_LIMIT:
        raise SingularGramError(
            f"row Gram condition beyond {GRAM_CONDITION_LIMIT:.0e}; X X^T not invertible"
        )
    z = scipy.linalg.solve(gram, y, assume_a="pos")
    return X.T @ z


def holp_select(beta_holp: np.ndarray, s: int) -> np.ndarray:
    """Indices of the s largest magnitudes; ties go to the lower index."""
    b = np.asarray(beta_holp, dtype=float)
    p = b.shape[0]
    if not 1 <= s <= p:
        raise InvalidSError(f"s={s} outside [1, {p}]")
    order = np.lexsort((np.arange(p), -np.abs(b)))
    return np.sort(order[:s])


def holp_select_all(beta_holp: np.ndarray) -> SelectorOutput:
    """Nested Top-s supports for s = 1..p."""
    b = np.asarray(beta_holp, dtype=float)
    p = b.shape[0]
    order = np.lexsort((np.arange(p), -np.abs(b)))
    supports = [np.sort(order[:s]) for s in range(1, p + 1)]
    coefs = np.zeros((p, p))
    for s in range(1, p + 1):
        coefs[s - 1, order[:s]] = b[order[:s]]
    return SelectorOutput(
        levels=np.arange(1, p + 1, dtype=float),
        selected_per_level=supports,
        coefficients_per_level=coefs,
    )
