"""Exception types shared across the package."""


class BivirusError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(BivirusError):
    """Malformed or invalid edge-list input.

    ``line`` is the 1-based line number of the offending input line when the
    problem is attributable to a single line, else None.
    """

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SpectralError(BivirusError):
    """Eigenvalue computation failed; carries the last residual seen."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DomainError(BivirusError):
    """A state vector lies outside its admissible domain beyond slack."""


class AssumptionError(BivirusError):
    """Rate-model assumption checks failed; carries the offending report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BracketError(BivirusError):
    """The coexistence bracket construction could not be completed."""


class SweepError(BivirusError):
    """Parameter sweep or threshold-curve extraction failed."""
