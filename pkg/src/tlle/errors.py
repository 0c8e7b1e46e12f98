"""Exception types shared across the library.

Validation failures are raised before any heavy computation or file
output; numeric failures are raised from inside a run.  The CLI maps the
two families to distinct exit codes.
"""


class ValidationError(ValueError):
    """An argument, configuration or input structure is invalid."""


class CsvParseError(ValidationError):
    """A CSV file cannot be parsed.

    The 1-based row number of the offending line (0 for whole-file
    problems such as an empty file) is stored on ``row``.
    """

    def __init__(self, message, row=0):
        super().__init__(message)
        self.row = row


class NumericError(RuntimeError):
    """A numeric computation failed (singular system, non-convergence)."""


class RankDeficiencyError(NumericError):
    """A neighborhood is numerically rank deficient.

    ``point`` carries the index of the offending point when known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegenerateNullSpaceError(NumericError):
    """The alignment matrix has more than one near-zero eigenvalue.

    Typically the neighborhood graph is disconnected, so the embedding
    coordinates are not determined by the bottom eigenvectors.
    """
