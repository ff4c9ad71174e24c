"""Exception hierarchy shared across the package."""


class WLassoError(Exception):
    """Base class for all errors raised by this package."""


class NonSymmetricError(WLassoError):
    """Input matrix is not symmetric beyond the allowed tolerance."""


class NumericalFailureError(WLassoError):
    """An underlying numerical routine (e.g. eigensolver) failed."""


class DegenerateMatrixError(WLassoError):
    """All eigenvalues fall below the floor; no usable whitening exists."""


class DimensionMismatchError(WLassoError):
    """Operand shapes are incompatible."""


class ZeroVarianceColumnError(WLassoError):
    """One or more columns have zero variance; correlation is undefined."""

    def __init__(self, indices):
        self.indices = list(indices)
        super().__init__(f"zero-variance columns at indices {self.indices}")


class EmptyDataError(WLassoError):
    """Empty design matrix or response vector."""


class DegenerateGridError(WLassoError):
    """The largest penalty value is zero; no meaningful grid exists."""


class SingularGramError(WLassoError):
    """X X^T is numerically singular; the projection estimator is undefined."""


class SingularActiveGramError(WLassoError):
    """X_S^T X_S is numerically singular; the condition check is undefined."""


class EmptySupportError(WLassoError):
    """The active set is empty or covers all columns."""


class DegenerateTruthError(WLassoError):
    """The true support is empty or equals the full index set."""


class InvalidKError(WLassoError):
    """K outside {1, ..., p}."""


class InvalidMError(WLassoError):
    """M outside {1, ..., p}."""


class InvalidSError(WLassoError):
    """s outside {1, ..., p}."""


class NonPSDScenarioError(WLassoError):
    """The block correlation parameters do not yield a PSD matrix."""
