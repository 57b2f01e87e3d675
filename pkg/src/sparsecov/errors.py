"""Exception types shared across the package."""


class SparseCovError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SparseCovError):
    """Operands have incompatible shapes."""


class NotPositiveDefinite(SparseCovError):
    """A matrix required to be positive definite is not."""


class DegenerateColumn(SparseCovError):
    """A variable has (numerically) zero variance where positive variance is required."""


class NonConvergence(SparseCovError):
    """An iterative routine hit its iteration cap before meeting its tolerance.

    When a partial estimate exists it is attached as ``result`` so callers
    (e.g. the CLI or a simulation harness) can still inspect or persist it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DataFormatError(SparseCovError):
    """An input file does not conform to the expected layout."""
