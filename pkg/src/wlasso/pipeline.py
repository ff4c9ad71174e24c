"""The whitening-based selection pipeline.

Steps, per penalty value lam on a shared grid:

1. estimate (or accept) the block correlation matrix and build its
   square-root / inverse-square-root pair;
2. whiten the design, Xt = X @ C^{-1/2};
3. solve the transformed-penalty Lasso for bt0(lam), then set every
   coefficient outside the K largest magnitudes to the K-th largest
   magnitude, with K chosen by the MSE-ratio rule;
4. map back b0 = C^{-1/2} @ bt, zero everything outside the M largest
   magnitudes (M chosen by the same rule on the original design), and pick
   the lam minimizing the resulting residual sum of squares among the
   penalties whose unthresholded fit does not memorize y.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import correlation
from .errors import DimensionMismatchError, InvalidKError, InvalidMError
from .linalg import WhiteningOperator, whitening_operator
from .solver import (
    DEFAULT_GRID_COUNT,
    DEFAULT_GRID_RATIO,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    RegularizationPath,
    generalized_lasso_whitened,
    lambda_grid,
)

DEFAULT_GAMMA = 0.95


@dataclass(frozen=True)
class ThresholdRule:
    """MSE-ratio stopping parameter; values in (0.9, 0.99) behave similarly."""

    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")


@dataclass(frozen=True)
class StageTimings:
    """Wall-clock seconds per pipeline stage."""

    sigma_estimation: float
    whitening: float
    path_solve: float
    thresholding: float

    @property
    def total(self) -> float:
        return self.sigma_estimation + self.whitening + self.path_solve + self.thresholding


@dataclass(frozen=True)
class WLassoFit:
    """Full per-lambda trace of the pipeline plus the final selection."""

    grid_values: np.ndarray
    beta_tilde0: np.ndarray  # count x p, unthresholded whitened-model coefficients
    beta_tilde: np.ndarray  # count x p, after Top-K magnitude replacement
    beta_hat: np.ndarray  # count x p, after back-transform and Top-M truncation
    K_hat: np.ndarray
    M_hat: np.ndarray
    lambda_hat: float
    lambda_index: int
    selected: np.ndarray  # nonzero support of beta_hat at lambda_hat, 0-based
    mse_k_curves: np.ndarray  # count x p
    mse_m_curves: np.ndarray  # count x p
    mse_at_m_hat: np.ndarray  # count
    operator: WhiteningOperator
    block_model: correlation.BlockCorrelationModel | None
    timings: StageTimings
    path_converged: np.ndarray = field(default=None)

    @property
    def beta(self) -> np.ndarray:
        """Final coefficient vector at the selected lambda."""
        return self.beta_hat[self.lambda_index]

    def supports_per_lambda(self) -> list[np.ndarray]:
        return [np.flatnonzero(b) for b in self.beta_hat]


def whiten_design(X: np.ndarray, op: WhiteningOperator) -> np.ndarray:
    """Xt = X @ C^{-1/2}."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != op.inv_sqrt.shape[0]:
        raise DimensionMismatchError(
            f"design has {X.shape[1]} columns but operator is "
            f"{op.inv_sqrt.shape[0]} x {op.inv_sqrt.shape[0]}"
        )
    return X @ op.inv_sqrt


def _magnitude_order(b: np.ndarray) -> np.ndarray:
    # descending magnitude, ties broken by ascending index
    return np.lexsort((np.arange(b.shape[0]), -np.abs(b)))


def threshold_beta_tilde(beta_tilde0: np.ndarray, K: int) -> np.ndarray:
    """Keep the K largest magnitudes; set every other entry to the K-th
    largest magnitude itself (a nonnegative scalar).

    Replacing the tail by the cutoff value rather than by zero makes the
    associated MSE curve fall steeply until the cutoff magnitude is
    negligible, so the ratio rule locates the effective support size instead
    of stopping at the first small fit improvement."""
    b = np.asarray(beta_tilde0, dtype=float)
    p = b.shape[0]
    if not 1 <= K <= p:
        raise InvalidKError(f"K={K} outside [1, {p}]")
    order = _magnitude_order(b)
    v_k = abs(b[order[K - 1]])
    out = np.full_like(b, v_k)
    out[order[:K]] = b[order[:K]]
    return out


def threshold_beta(beta0: np.ndarray, M: int) -> np.ndarray:
    """Keep the M largest magnitudes, zero out everything else."""
    b = np.asarray(beta0, dtype=float)
    p = b.shape[0]
    if not 1 <= M <= p:
        raise InvalidMError(f"M={M} outside [1, {p}]")
    order = _magnitude_order(b)
    out = np.zeros_like(b)
    out[order[:M]] = b[order[:M]]
    return out


FLAT_RUN = 4

# The penalty index is only searched where the unthresholded fit leaves at
# least this fraction of ||y||^2 unexplained; with p >> n the small-penalty
# end of the grid memorizes y, and its near-zero residual would otherwise
# always win the minimum-residual rule with a meaningless coefficient ranking.
OVERFIT_GUARD = 0.12


def _first_ratio_stop(mse: np.ndarray, gamma: float) -> int:
    """Smallest K >= 1 (1-based) at which the curve enters a flat stretch:
    mse[K'] / mse[K'-1] >= gamma for the next ``FLAT_RUN`` steps (or to the
    end of the curve, whichever comes first); p if the curve never flattens.

    Requiring a run of flat ratios rather than a single one makes the cutoff
    immune to isolated near-ties between consecutive magnitudes inside an
    otherwise steeply decreasing stretch, while still stopping at the elbow
    rather than at later noise-induced drops."""
    p = mse.shape[0]
    prev = mse[:-1]
    nxt = mse[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prev > 0.0, nxt / prev, 1.0)
    flat = ratio >= gamma
    m = flat.shape[0]
    run = 0
    # scan backwards: run[i] = length of the flat run starting at i
    starts = np.zeros(m, dtype=np.int64)
    for i in range(m - 1, -1, -1):
        run = run + 1 if flat[i] else 0
        starts[i] = run
    needed = np.minimum(FLAT_RUN, m - np.arange(m))
    hits = np.flatnonzero(starts >= needed)
    return int(hits[0]) + 1 if hits.size else p


def _mse_curve_top_k(y: np.ndarray, X: np.ndarray, b: np.ndarray) -> np.ndarray:
    """||y - X b^{(K)}||^2 for K = 1..p under the magnitude-replacement rule.

    Writing b^{(K)} as the exact Top-K part plus v_K times the remaining
    columns' sum, the fitted values are two column cumsums, so the whole
    curve costs O(n p).
    """
    order = _magnitude_order(b)
    Xo = X[:, order]
    bo = b[order]
    v = np.abs(bo)
    top_fit = np.cumsum(Xo * bo, axis=1)
    col_fit = np.cumsum(Xo, axis=1)
    tail_fit = col_fit[:, -1:] - col_fit
    resid = y[:, None] - top_fit - v[None, :] * tail_fit
    return np.einsum("ij,ij->j", resid, resid)


def _mse_curve_top_m(y: np.ndarray, X: np.ndarray, b: np.ndarray) -> np.ndarray:
    """||y - X b^{(M)}||^2 for M = 1..p under the truncation-to-zero rule."""
    order = _magnitude_order(b)
    fit = np.cumsum(X[:, order] * b[order], axis=1)
    resid = y[:, None] - fit
    return np.einsum("ij,ij->j", resid, resid)


def select_K(
    y: np.ndarray, Xt: np.ndarray, beta_tilde0: np.ndarray, rule: ThresholdRule
) -> tuple[int, np.ndarray]:
    """MSE-ratio choice of the magnitude-replacement cutoff on the whitened model."""
    curve = _mse_curve_top_k(y, Xt, beta_tilde0)
    return _first_ratio_stop(curve, rule.gamma), curve


def select_M(
    y: np.ndarray, X: np.ndarray, beta0: np.ndarray, rule: ThresholdRule
) -> tuple[int, np.ndarray]:
    """MSE-ratio choice of the truncation cutoff on the original model."""
    curve = _mse_curve_top_m(y, X, beta0)
    return _first_ratio_stop(curve, rule.gamma), curve


def backtransform(beta_tilde: np.ndarray, op: WhiteningOperator) -> np.ndarray:
    """b0 = C^{-1/2} @ bt."""
    beta_tilde = np.asarray(beta_tilde, dtype=float)
    if beta_tilde.shape[0] != op.inv_sqrt.shape[0]:
        raise DimensionMismatchError(
            f"vector has length {beta_tilde.shape[0]} but operator is "
            f"{op.inv_sqrt.shape[0]} x {op.inv_sqrt.shape[0]}"
        )
    return op.inv_sqrt @ beta_tilde


def select_lambda(mse_at_m_hat: np.ndarray) -> int:
    """Index of the grid value minimizing the post-truncation residual;
    ties go to the smaller index, i.e. the larger (sparser) penalty."""
    return int(np.argmin(mse_at_m_hat))


def wlasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    sigma: np.ndarray | None = None,
    rule: ThresholdRule | None = None,
    grid_count: int = DEFAULT_GRID_COUNT,
    grid_ratio: float = DEFAULT_GRID_RATIO,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    eig_floor: float | None = None,
    threads: int = 1,
) -> WLassoFit:
    """Run the full pipeline and select lambda by the residual-minimum rule.

    Parameters
    ----------
    sigma : optional
        Known correlation matrix; when omitted, the block-structured estimate
        is computed from X.
    threads : int
        Worker count for the per-lambda cutoff selection; results are
        independent of this value.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise DimensionMismatchError(f"X has {n} rows but y has {y.shape[0]} entries")
    if n < 2 or p < 2:
        raise ValueError("need at least 2 rows and 2 columns")
    rule = rule or ThresholdRule()

    t0 = time.perf_counter()
    block_model = None
    if sigma is None:
        sigma, block_model = correlation.estimate_block_sigma(X)
    t1 = time.perf_counter()
    op = whitening_operator(sigma, eig_floor=eig_floor)
    Xt = whiten_design(X, op)
    t2 = time.perf_counter()
    grid = lambda_grid(X, y, count=grid_count, ratio=grid_ratio)
    path: RegularizationPath = generalized_lasso_whitened(
        Xt, y, op, grid, tol=tol, max_iter=max_iter
    )
    t3 = time.perf_counter()

    count = grid.count
    beta_tilde = np.zeros((count, p))
    beta_hat = np.zeros((count, p))
    K_hat = np.zeros(count, dtype=np.int64)
    M_hat = np.zeros(count, dtype=np.int64)
    mse_k_curves = np.zeros((count, p))
    mse_m_curves = np.zeros((count, p))

    def _one_lambda(k: int) -> None:
        bt0 = path.coefficients[k]
        K, k_curve = select_K(y, Xt, bt0, rule)
        bt = threshold_beta_tilde(bt0, K)
        b0 = backtransform(bt, op)
        M, m_curve = select_M(y, X, b0, rule)
        beta_tilde[k] = bt
        beta_hat[k] = threshold_beta(b0, M)
        K_hat[k] = K
        M_hat[k] = M
        mse_k_curves[k] = k_curve
        mse_m_curves[k] = m_curve

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_one_lambda, range(count)))
    else:
        for k in range(count):
            _one_lambda(k)

    mse_at_m_hat = mse_m_curves[np.arange(count), M_hat - 1]
    # Unthresholded residual per lambda: the magnitude-replacement estimator
    # at cutoff p is the raw solution, so it is the last point of each curve.
    raw_rss = mse_k_curves[:, -1]
    eligible = raw_rss >= OVERFIT_GUARD * float(y @ y)
    if eligible.any():
        candidates = np.flatnonzero(eligible)
        lam_idx = int(candidates[select_lambda(mse_at_m_hat[candidates])])
    else:
        lam_idx = select_lambda(mse_at_m_hat)
    t4 = time.perf_counter()

    return WLassoFit(
        grid_values=grid.values,
        beta_tilde0=path.coefficients,
        beta_tilde=beta_tilde,
        beta_hat=beta_hat,
        K_hat=K_hat,
        M_hat=M_hat,
        lambda_hat=float(grid.values[lam_idx]),
        lambda_index=lam_idx,
        selected=np.flatnonzero(beta_hat[lam_idx]),
        mse_k_curves=mse_k_curves,
        mse_m_curves=mse_m_curves,
        mse_at_m_hat=mse_at_m_hat,
        operator=op,
        block_model=block_model,
        timings=StageTimings(
            sigma_estimation=t1 - t0,
            whitening=t2 - t1,
            path_solve=t3 - t2,
            thresholding=t4 - t3,
        ),
        path_converged=path.converged,
    )
