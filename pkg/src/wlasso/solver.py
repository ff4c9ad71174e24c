"""Lasso solver over a penalty grid, plus the transformed-penalty variant.

The criterion is ||y - X b||_2^2 + lam * ||b||_1 with no 1/n or 1/2 factor,
so the subgradient condition at zero reads |2 X_j^T y| <= lam and
lam_max = 2 * max_j |X_j^T y|.

The variant with an invertible symmetric penalty matrix D (criterion
||y - Xt b||^2 + lam * ||D b||_1 with D = C^{-1/2}) is solved exactly by the
substitution theta = D b, which turns it into a standard Lasso on
(Xt @ C^{1/2}, y).
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DegenerateGridError, DimensionMismatchError, EmptyDataError
from .linalg import WhiteningOperator

DEFAULT_GRID_COUNT = 100
DEFAULT_GRID_RATIO = 1e-3
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly decreasing geometric grid starting at lam_max."""

    values: np.ndarray

    @property
    def count(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RegularizationPath:
    """Per-lambda coefficient vectors with recomputed objective values.

    ``converged[k]`` is False when coordinate descent hit the sweep cap at
    grid point k; the partial solution is still stored.
    """

    grid: LambdaGrid
    coefficients: np.ndarray
    objective: np.ndarray
    converged: np.ndarray

    @property
    def all_converged(self) -> bool:
        return bool(self.converged.all())


def lambda_grid(
    X: np.ndarray,
    y: np.ndarray,
    count: int = DEFAULT_GRID_COUNT,
    ratio: float = DEFAULT_GRID_RATIO,
) -> LambdaGrid:
    """Geometric grid from lam_max down to ratio * lam_max.

    Raises
    ------
    EmptyDataError
        If X or y has no entries.
    DegenerateGridError
        If y is orthogonal to every column of X (lam_max = 0).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.size == 0 or y.size == 0:
        raise EmptyDataError("empty design matrix or response")
    if count < 2:
        raise ValueError("grid count must be at least 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("grid ratio must lie in (0, 1)")
    lam_max = 2.0 * float(np.max(np.abs(X.T @ y)))
    if lam_max == 0.0:
        raise DegenerateGridError("y is orthogonal to every column of X")
    values = np.geomspace(lam_max, ratio * lam_max, num=count)
    values[0] = lam_max
    return LambdaGrid(values=values)


@njit(cache=True, nogil=True)
def _sweep(X, col_norms, beta, r, lam, active_only):  # pragma: no cover
    n, p = X.shape
    half = 0.5 * lam
    max_delta = 0.0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        cn = col_norms[j]
        if cn == 0.0:
            continue
        rho = cn * bj
        for i in range(n):
            rho += X[i, j] * r[i]
        if rho > half:
            bnew = (rho - half) / cn
        elif rho < -half:
            bnew = (rho + half) / cn
        else:
            bnew = 0.0
        d = bnew - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= d * X[i, j]
            beta[j] = bnew
            if abs(d) > max_delta:
                max_delta = abs(d)
    return max_delta


@njit(cache=True, nogil=True)
def _kkt_ok(X, beta, r, lam, slack):  # pragma: no cover
    n, p = X.shape
    for j in range(p):
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        g *= 2.0
        if beta[j] == 0.0:
            if abs(g) > lam + slack:
                return False
        else:
            s = 1.0 if beta[j] > 0.0 else -1.0
            if abs(g - lam * s) > slack:
                return False
    return True


@njit(cache=True, nogil=True)
def _cd_solve(X, col_norms, beta, r, lam, tol, max_iter):  # pragma: no cover
    sweeps = 0
    slack = 10.0 * tol
    while sweeps < max_iter:
        max_delta = _sweep(X, col_norms, beta, r, lam, False)
        sweeps += 1
        if max_delta < tol and _kkt_ok(X, beta, r, lam, slack):
            return True
        while sweeps < max_iter:
            md = _sweep(X, col_norms, beta, r, lam, True)
            sweeps += 1
            if md < tol:
                break
    return False


def lasso_path(
    X: np.ndarray,
    y: np.ndarray,
    grid: LambdaGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RegularizationPath:
    """Coordinate descent over the grid, warm-starting each point from the last.

    Convergence requires both a full sweep with max coefficient change below
    ``tol`` and the KKT certificate within 10 * tol on the gradient.
    """
    X = np.asfortranarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
        )
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    n, p = X.shape
    col_norms = np.einsum("ij,ij->j", X, X)
    beta = np.zeros(p)
    r = y.copy()
    count = grid.count
    coefficients = np.zeros((count, p))
    objective = np.zeros(count)
    converged = np.ones(count, dtype=bool)
    for k, lam in enumerate(grid.values):
        converged[k] = _cd_solve(X, col_norms, beta, r, lam, tol, max_iter)
        coefficients[k] = beta
        objective[k] = float(r @ r + lam * np.abs(beta).sum())
    return RegularizationPath(
        grid=grid, coefficients=coefficients, objective=objective, converged=converged
    )


def generalized_lasso_whitened(
    Xt: np.ndarray,
    y: np.ndarray,
    penalty: WhiteningOperator,
    grid: LambdaGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RegularizationPath:
    """Path of minimizers of ||y - Xt b||^2 + lam * ||C^{-1/2} b||_1.

    Solved via theta = C^{-1/2} b: a standard Lasso on (Xt @ C^{1/2}, y),
    then b = C^{1/2} theta.  The stored objective is the transformed-penalty
    criterion re-evaluated at b directly, as a consistency check on the
    reduction.
    """
    Xt = np.asarray(Xt, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    p = penalty.sqrt.shape[0]
    if Xt.shape[1] != p:
        raise DimensionMismatchError(
            f"design has {Xt.shape[1]} columns but penalty is {p} x {p}"
        )
    theta_path = lasso_path(Xt @ penalty.sqrt, y, grid, tol=tol, max_iter=max_iter)
    beta_tilde0 = theta_path.coefficients @ penalty.sqrt
    resid = y[None, :] - beta_tilde0 @ Xt.T
    objective = np.einsum("ij,ij->i", resid, resid) + grid.values * np.abs(
        beta_tilde0 @ penalty.inv_sqrt
    ).sum(axis=1)
    return RegularizationPath(
        grid=grid,
        coefficients=beta_tilde0,
        objective=objective,
        converged=theta_path.converged,
    )
