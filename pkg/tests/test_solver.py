import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlasso.errors import DegenerateGridError
from wlasso.linalg import whitening_operator
from wlasso.solver import (
    generalized_lasso_whitened,
    lambda_grid,
    lasso_path,
)

from oracles import (
    generalized_lasso_cvxpy,
    generalized_objective,
    lasso_fista,
    lasso_objective,
    random_pd_correlation,
    soft_threshold,
)


def test_grid_endpoints():
    # X = I2, y = (3, 1): lambda_max = 2 * max |X_j' y| = 6
    grid = lambda_grid(np.eye(2), np.array([3.0, 1.0]), count=5, ratio=1e-2)
    assert grid.values[0] == pytest.approx(6.0)
    assert grid.values[-1] == pytest.approx(0.06)
    assert np.all(np.diff(grid.values) < 0)
    assert grid.count == 5


def test_grid_rejects_zero_response():
    with pytest.raises(DegenerateGridError):
        lambda_grid(np.eye(2), np.zeros(2), count=5, ratio=1e-2)


def test_identity_design_is_soft_thresholding():
    # orthonormal design: minimizer of ||y - b||^2 + lam |b|_1 entrywise
    y = np.array([3.0, -1.0, 0.5])
    grid = lambda_grid(np.eye(3), y, count=8, ratio=1e-2)
    path = lasso_path(np.eye(3), y, grid)
    for k, lam in enumerate(grid.values):
        np.testing.assert_allclose(
            path.coefficients[k], soft_threshold(y, lam / 2.0), atol=1e-9
        )


def test_path_matches_proximal_gradient_oracle():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(12, 8))
    y = rng.normal(size=12)
    grid = lambda_grid(X, y, count=12, ratio=1e-2)
    path = lasso_path(X, y, grid)
    for k, lam in enumerate(grid.values):
        oracle = lasso_fista(X, y, lam)
        assert lasso_objective(X, y, path.coefficients[k], lam) <= (
            lasso_objective(X, y, oracle, lam) + 1e-8
        )
        np.testing.assert_allclose(path.coefficients[k], oracle, atol=1e-6)


def test_objective_recorded_matches_recomputation():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(10, 6))
    y = rng.normal(size=10)
    grid = lambda_grid(X, y, count=6, ratio=0.05)
    path = lasso_path(X, y, grid)
    for k, lam in enumerate(grid.values):
        assert path.objective[k] == pytest.approx(
            lasso_objective(X, y, path.coefficients[k], lam)
        )
    assert path.converged.all()


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=0, max_value=10_000),
    st.integers(min_value=2, max_value=9),
    st.integers(min_value=3, max_value=14),
)
def test_kkt_certificate_holds(seed, p, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X @ rng.normal(size=p) + rng.normal(size=n)
    if not np.any(X.T @ y):
        return
    grid = lambda_grid(X, y, count=5, ratio=0.05)
    path = lasso_path(X, y, grid)
    for k, lam in enumerate(grid.values):
        b = path.coefficients[k]
        g = 2.0 * X.T @ (y - X @ b)
        on = b != 0
        np.testing.assert_allclose(g[on], lam * np.sign(b[on]), atol=1e-5)
        assert np.all(np.abs(g[~on]) <= lam + 1e-5)


def test_generalized_solution_matches_convex_oracle():
    rng = np.random.default_rng(17)
    n, p = 15, 6
    X = rng.normal(size=(n, p))
    y = rng.normal(size=n)
    sigma = random_pd_correlation(rng, p)
    op = whitening_operator(sigma)
    Xt = X @ op.inv_sqrt
    grid = lambda_grid(Xt @ op.sqrt, y, count=4, ratio=0.05)
    path = generalized_lasso_whitened(Xt, y, op, grid)
    for k, lam in enumerate(grid.values):
        oracle = generalized_lasso_cvxpy(Xt, y, op.inv_sqrt, lam)
        ours = generalized_objective(Xt, y, path.coefficients[k], op.inv_sqrt, lam)
        theirs = generalized_objective(Xt, y, oracle, op.inv_sqrt, lam)
        assert ours <= theirs + 1e-6
        assert path.objective[k] == pytest.approx(ours)
