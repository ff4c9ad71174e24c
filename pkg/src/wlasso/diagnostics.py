"""Support-recovery metrics and the irrepresentable-condition check.

The condition bounds |X_{S^c}^T X_S (X_S^T X_S)^{-1} sign(b_S)| entrywise by
1 - eta; large cross-correlation between non-active and active columns breaks
it, which is exactly what whitening the design is meant to repair.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .baselines import SelectorOutput
from .errors import DegenerateTruthError, EmptySupportError, SingularActiveGramError

ACTIVE_GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class ICReport:
    """Per-component condition values over the non-active set."""

    per_component: np.ndarray
    eta: float
    violated_fraction: float


@dataclass(frozen=True)
class RecoveryMetrics:
    tpr: float
    fpr: float

    @property
    def diff(self) -> float:
        return self.tpr - self.fpr


def ic_check(
    X: np.ndarray,
    support: np.ndarray,
    signs: np.ndarray | None = None,
    eta: float = 0.0,
) -> ICReport:
    """Evaluate the condition on every non-active column.

    A component is counted as violated when its value exceeds 1 - eta; the
    default eta = 0 is the most permissive reading (threshold exactly 1).

    Raises
    ------
    EmptySupportError
        If the support is empty or covers all columns.
    SingularActiveGramError
        If X_S^T X_S is numerically singular.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    support = np.asarray(support, dtype=np.int64)
    if support.size == 0 or support.size >= p:
        raise EmptySupportError("support must be nonempty and proper")
    if signs is None:
        signs = np.ones(support.size)
    else:
        signs = np.asarray(signs, dtype=float).ravel()
    mask = np.zeros(p, dtype=bool)
    mask[support] = True
    Xs = X[:, mask]
    Xc = X[:, ~mask]
    gram = Xs.T @ Xs
    eigvals = np.linalg.eigvalsh(gram)
    if eigvals[0] <= 0.0 or eigvals[-1] / eigvals[0] > ACTIVE_GRAM_CONDITION_LIMIT:
        raise SingularActiveGramError("active-column Gram matrix is numerically singular")
    lhs = np.abs(Xc.T @ (Xs @ scipy.linalg.solve(gram, signs, assume_a="pos")))
    violated = float(np.mean(lhs > 1.0 - eta))
    return ICReport(per_component=lhs, eta=eta, violated_fraction=violated)


def recovery_metrics(selected, truth, p: int) -> RecoveryMetrics:
    """TPR = |selected & truth| / |truth|, FPR over the complement of truth.

    Raises
    ------
    DegenerateTruthError
        If truth is empty or equals the full index set.
    """
    truth_set = set(int(i) for i in truth)
    if not truth_set or len(truth_set) >= p:
        raise DegenerateTruthError("truth must be a nonempty proper subset")
    selected_set = set(int(i) for i in selected)
    tp = len(selected_set & truth_set)
    fp = len(selected_set - truth_set)
    return RecoveryMetrics(tpr=tp / len(truth_set), fpr=fp / (p - len(truth_set)))


def best_diff_over_levels(
    outputs: SelectorOutput, truth, p: int
) -> tuple[float, RecoveryMetrics]:
    """Level maximizing tpr - fpr; ties go to the sparser level."""
    best_level = None
    best: RecoveryMetrics | None = None
    best_size = -1
    for level, selected in zip(outputs.levels, outputs.selected_per_level):
        m = recovery_metrics(selected, truth, p)
        if best is None or m.diff > best.diff or (m.diff == best.diff and len(selected) < best_size):
            best, best_level, best_size = m, float(level), len(selected)
    return best_level, best
