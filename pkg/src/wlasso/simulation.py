"""Synthetic data generation and the replication harness.

Rows of the design are independent Gaussian vectors whose correlation matrix
has the two-block structure: within-active alpha1, cross alpha2,
within-non-active alpha3, or the identity.  Ten (by default) coefficients are
drawn uniformly at random and set to the signal value b; the noise is
iid Gaussian.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, diagnostics, pipeline
from .errors import NonPSDScenarioError, WLassoError
from .solver import lambda_grid

RNG_NAME = "numpy-pcg64"  # np.random.default_rng seeded via SeedSequence.spawn


@dataclass(frozen=True)
class Scenario:
    """One simulation setting; ``alphas=None`` means the identity correlation."""

    n: int
    p: int
    b: float
    alphas: tuple[float, float, float] | None
    seed: int
    n_active: int = 10
    noise_sd: float = 1.0

    def __post_init__(self):
        if not 0 < self.n_active < self.p:
            raise ValueError("n_active must lie strictly between 0 and p")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if self.alphas is not None:
            if len(self.alphas) != 3 or any(not 0.0 <= abs(a) < 1.0 for a in self.alphas):
                raise ValueError("alphas must be three values with magnitude in [0, 1)")
            if _block_min_eigenvalue(self.n_active, self.p - self.n_active, *self.alphas) < -1e-10:
                raise NonPSDScenarioError(
                    f"alphas {self.alphas} give a non-PSD correlation matrix"
                )


def _block_min_eigenvalue(p1: int, p2: int, a1: float, a2: float, a3: float) -> float:
    """Smallest eigenvalue of the two-block compound-symmetry matrix.

    The spectrum is 1-a1 and 1-a3 (from the within-block contrasts) plus the
    two eigenvalues of the reduced 2x2 matrix of block sums.
    """
    reduced = np.array(
        [
            [1.0 + (p1 - 1) * a1, np.sqrt(p1 * p2) * a2],
            [np.sqrt(p1 * p2) * a2, 1.0 + (p2 - 1) * a3],
        ]
    )
    eigs = [float(np.linalg.eigvalsh(reduced)[0])]
    if p1 > 1:
        eigs.append(1.0 - a1)
    if p2 > 1:
        eigs.append(1.0 - a3)
    return min(eigs)


def population_sigma(scenario: Scenario, truth: np.ndarray) -> np.ndarray:
    """Expand the scenario's block parameters around the given active set."""
    p = scenario.p
    if scenario.alphas is None:
        return np.eye(p)
    a1, a2, a3 = scenario.alphas
    active = np.zeros(p, dtype=bool)
    active[truth] = True
    sigma = np.where(
        np.outer(active, active), a1, np.where(np.outer(~active, ~active), a3, a2)
    )
    np.fill_diagonal(sigma, 1.0)
    return sigma


def generate_dataset(
    scenario: Scenario, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw (X, y, truth, beta, sigma) for one replication."""
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    p, n = scenario.p, scenario.n
    truth = np.sort(rng.choice(p, size=scenario.n_active, replace=False))
    beta = np.zeros(p)
    beta[truth] = scenario.b
    sigma = population_sigma(scenario, truth)
    Z = rng.standard_normal((n, p))
    if scenario.alphas is None:
        X = Z
    else:
        eigvals, eigvecs = np.linalg.eigh(sigma)
        eigvals = np.maximum(eigvals, 0.0)
        X = Z @ ((eigvecs * np.sqrt(eigvals)) @ eigvecs.T)
    y = X @ beta + scenario.noise_sd * rng.standard_normal(n)
    return X, y, truth, beta, sigma


@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    method: str
    tpr: float
    fpr: float
    diff: float
    level: float  # lambda or s at which the metrics were taken
    seconds: float
    error: str = ""


@dataclass(frozen=True)
class MethodSummary:
    method: str
    count: int
    mean_tpr: float
    sd_tpr: float
    mean_fpr: float
    sd_fpr: float
    mean_diff: float
    sd_diff: float
    failures: int


@dataclass(frozen=True)
class ReplicationSummary:
    scenario: Scenario
    replications: int
    gamma: float
    records: list[ReplicationRecord] = field(default_factory=list)

    def methods(self) -> list[str]:
        seen: list[str] = []
        for r in self.records:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def summarize(self) -> list[MethodSummary]:
        out = []
        for m in self.methods():
            rows = [r for r in self.records if r.method == m]
            ok = [r for r in rows if not r.error]
            if ok:
                tpr = np.array([r.tpr for r in ok])
                fpr = np.array([r.fpr for r in ok])
                diff = np.array([r.diff for r in ok])
                out.append(
                    MethodSummary(
                        method=m,
                        count=len(ok),
                        mean_tpr=float(tpr.mean()),
                        sd_tpr=float(tpr.std(ddof=1)) if len(ok) > 1 else 0.0,
                        mean_fpr=float(fpr.mean()),
                        sd_fpr=float(fpr.std(ddof=1)) if len(ok) > 1 else 0.0,
                        mean_diff=float(diff.mean()),
                        sd_diff=float(diff.std(ddof=1)) if len(ok) > 1 else 0.0,
                        failures=len(rows) - len(ok),
                    )
                )
            else:
                out.append(
                    MethodSummary(m, 0, float("nan"), 0.0, float("nan"), 0.0,
                                  float("nan"), 0.0, len(rows))
                )
        return out


KNOWN_METHODS = ("wlasso", "wlasso_known", "lasso", "holp")


def _run_wlasso(
    X, y, truth, sigma, p, gamma, grid_count, grid_ratio, known: bool
) -> list[tuple[str, float, float, float, float]]:
    name = "wlasso_known" if known else "wlasso"
    fit = pipeline.wlasso_fit(
        X,
        y,
        sigma=sigma if known else None,
        rule=pipeline.ThresholdRule(gamma=gamma),
        grid_count=grid_count,
        grid_ratio=grid_ratio,
    )
    m_sel = diagnostics.recovery_metrics(fit.selected, truth, p)
    rows = [(name, m_sel.tpr, m_sel.fpr, m_sel.diff, fit.lambda_hat)]
    best = None
    best_level = None
    for lam, support in zip(fit.grid_values, fit.supports_per_lambda()):
        m = diagnostics.recovery_metrics(support, truth, p)
        if best is None or m.diff > best.diff:
            best, best_level = m, float(lam)
    rows.append((name + "_best", best.tpr, best.fpr, best.diff, best_level))
    return rows


def _run_replication(
    scenario: Scenario,
    rep: int,
    rng: np.random.Generator,
    methods,
    gamma: float,
    grid_count: int,
    grid_ratio: float,
) -> list[ReplicationRecord]:
    X, y, truth, _, sigma = generate_dataset(scenario, rng)
    p = scenario.p
    records = []
    for method in methods:
        start = time.perf_counter()
        try:
            if method in ("wlasso", "wlasso_known"):
                rows = _run_wlasso(
                    X, y, truth, sigma, p, gamma, grid_count, grid_ratio,
                    known=(method == "wlasso_known"),
                )
            elif method == "lasso":
                grid = lambda_grid(X, y, count=grid_count, ratio=grid_ratio)
                out = baselines.lasso_select(X, y, grid)
                level, m = diagnostics.best_diff_over_levels(out, truth, p)
                rows = [("lasso", m.tpr, m.fpr, m.diff, level)]
            elif method == "holp":
                beta_holp = baselines.holp_estimate(X, y)
                out = baselines.holp_select_all(beta_holp)
                level, m = diagnostics.best_diff_over_levels(out, truth, p)
                rows = [("holp", m.tpr, m.fpr, m.diff, level)]
            else:
                raise ValueError(f"unknown method {method!r}")
            elapsed = time.perf_counter() - start
            for name, tpr, fpr, diff, level in rows:
                records.append(
                    ReplicationRecord(rep, name, tpr, fpr, diff, level, elapsed)
                )
        except WLassoError as exc:
            elapsed = time.perf_counter() - start
            records.append(
                ReplicationRecord(
                    rep, method, float("nan"), float("nan"), float("nan"),
                    float("nan"), elapsed, error=type(exc).__name__,
                )
            )
    return records


def run_scenario(
    scenario: Scenario,
    methods=("wlasso", "lasso", "holp"),
    replications: int = 100,
    gamma: float = pipeline.DEFAULT_GAMMA,
    grid_count: int = 100,
    grid_ratio: float = 1e-3,
    threads: int = 1,
) -> ReplicationSummary:
    """Generate, fit and score every method over independent replications.

    Each replication derives its generator from SeedSequence(seed).spawn, so
    the results do not depend on the worker count.  Per-method failures (for
    example a singular row Gram for the projection baseline) are recorded as
    error rows, not raised.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    for m in methods:
        if m not in KNOWN_METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {KNOWN_METHODS}")
    children = np.random.SeedSequence(scenario.seed).spawn(replications)

    def one(rep: int) -> list[ReplicationRecord]:
        return _run_replication(
            scenario, rep, np.random.default_rng(children[rep]), methods,
            gamma, grid_count, grid_ratio,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(one, range(replications)))
    else:
        per_rep = [one(rep) for rep in range(replications)]
    records = [record for rep_records in per_rep for record in rep_records]
    return ReplicationSummary(
        scenario=scenario, replications=replications, gamma=gamma, records=records
    )
