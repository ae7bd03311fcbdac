"""Exception hierarchy.

Each class carries the CLI exit code it maps to.
"""


class EventForecastError(Exception):
    exit_code = 1
    code = "error"


class DomainError(EventForecastError, ValueError):
    exit_code = 3
    code = "domain"


class DataError(EventForecastError, ValueError):
    """Malformed or invalid input data."""

    exit_code = 3
    code = "data"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EstimabilityError(EventForecastError):
    """Too little event information to estimate both parameters."""

    exit_code = 4
    code = "estimability"


class ConvergenceError(EventForecastError):
    exit_code = 4
    code = "convergence"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateRiskSetError(DomainError):
    code = "degenerate-risk-set"


class BootstrapError(EventForecastError):
    exit_code = 4
    code = "bootstrap"


class StudyError(EventForecastError):
    exit_code = 4
    code = "study"
