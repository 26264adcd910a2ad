"""Exception hierarchy.

``InputError`` subclasses indicate bad input files or data (CLI exit
code 2); ``ModelError`` subclasses indicate a modeling/selection failure
(CLI exit code 1).
"""


class DemandcastError(Exception):
    """Base class for all package errors."""


class InputError(DemandcastError):
    """Malformed or insufficient input data."""


class FormatError(InputError):
    """File does not match its expected format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CoverageError(InputError):
    """An exogenous source does not cover the required hourly span."""


class CleaningError(InputError):
    """A gap cannot be filled (boundary gap or no reference day)."""


class ModelError(DemandcastError):
    """Model estimation or selection failed."""


class ConvergenceError(ModelError):
    """An iterative fit did not converge within its budget."""


class RankDeficiencyError(ModelError):
    """Design matrix is rank deficient."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; collinear columns: "
            + ", ".join(self.columns)
        )
