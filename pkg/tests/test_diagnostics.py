import numpy as np
import pytest

from wlasso.baselines import SelectorOutput
from wlasso.diagnostics import (
    best_diff_over_levels,
    ic_check,
    recovery_metrics,
)
from wlasso.errors import (
    DegenerateTruthError,
    EmptySupportError,
    SingularActiveGramError,
)


def test_recovery_metrics_frozen_fractions():
    m = recovery_metrics(np.array([0, 1, 5]), np.array([1, 2]), p=10)
    assert m.tpr == pytest.approx(0.5)  # found 1 of {1, 2}
    assert m.fpr == pytest.approx(2.0 / 8.0)  # picked 0 and 5 out of 8 nulls
    assert m.diff == pytest.approx(0.25)


def test_recovery_metrics_perfect_and_empty():
    truth = np.array([2, 3])
    perfect = recovery_metrics(truth, truth, p=6)
    assert (perfect.tpr, perfect.fpr) == (1.0, 0.0)
    empty = recovery_metrics(np.array([], dtype=int), truth, p=6)
    assert (empty.tpr, empty.fpr) == (0.0, 0.0)


def test_recovery_metrics_degenerate_truth():
    with pytest.raises(DegenerateTruthError):
        recovery_metrics(np.array([0]), np.array([], dtype=int), p=4)
    with pytest.raises(DegenerateTruthError):
        recovery_metrics(np.array([0]), np.arange(4), p=4)


def test_ic_check_orthogonal_design_has_no_violations():
    report = ic_check(np.eye(5), np.array([0, 2]))
    np.testing.assert_allclose(report.per_component, 0.0, atol=1e-12)
    assert report.violated_fraction == 0.0


def test_ic_check_hand_computed_correlated_pair():
    # two active columns, one null column correlated with both
    X = np.array(
        [
            [1.0, 0.0, 0.6],
            [0.0, 1.0, 0.6],
            [0.0, 0.0, 0.2],
        ]
    )
    report = ic_check(X, np.array([0, 1]))
    # X_Sc' X_S (X_S' X_S)^{-1} sign = |0.6 + 0.6| = 1.2 > 1
    assert report.per_component[0] == pytest.approx(1.2)
    assert report.violated_fraction == 1.0


def test_ic_check_eta_relaxes_the_bound():
    X = np.array(
        [
            [1.0, 0.0, 0.6],
            [0.0, 1.0, 0.3],
            [0.0, 0.0, 0.2],
        ]
    )
    strict = ic_check(X, np.array([0, 1]))
    assert strict.per_component[0] == pytest.approx(0.9)
    assert strict.violated_fraction == 0.0
    tight = ic_check(X, np.array([0, 1]), eta=0.2)
    assert tight.violated_fraction == 1.0  # bound becomes 0.8 < 0.9


def test_ic_check_signs_matter():
    X = np.array(
        [
            [1.0, 0.0, 0.6],
            [0.0, 1.0, 0.6],
            [0.0, 0.0, 0.2],
        ]
    )
    flipped = ic_check(X, np.array([0, 1]), signs=np.array([1.0, -1.0]))
    assert flipped.per_component[0] == pytest.approx(0.0)


def test_ic_check_error_paths():
    with pytest.raises(EmptySupportError):
        ic_check(np.eye(4), np.array([], dtype=int))
    with pytest.raises(EmptySupportError):
        ic_check(np.eye(4), np.arange(4))
    X = np.ones((4, 3))  # duplicate active columns: singular active Gram
    with pytest.raises(SingularActiveGramError):
        ic_check(X, np.array([0, 1]))


def _outputs(levels, supports, p):
    return SelectorOutput(
        levels=np.asarray(levels, dtype=float),
        selected_per_level=[np.asarray(s, dtype=int) for s in supports],
        coefficients_per_level=[np.zeros(p) for _ in supports],
    )


def test_best_diff_picks_highest_tpr_minus_fpr():
    truth = np.array([0, 1])
    out = _outputs(
        [3.0, 2.0, 1.0],
        [[0], [0, 1], [0, 1, 2, 3]],
        p=6,
    )
    level, best = best_diff_over_levels(out, truth, p=6)
    assert level == 2.0
    assert best.diff == pytest.approx(1.0)


def test_best_diff_tie_goes_to_sparser_support():
    truth = np.array([0, 1])
    # both levels achieve diff = 0.5; the singleton support must win
    out = _outputs([2.0, 1.0], [[0, 1, 2], [0]], p=4)
    level, best = best_diff_over_levels(out, truth, p=4)
    assert level == 1.0
    assert best.tpr == pytest.approx(0.5)
    assert best.fpr == 0.0
