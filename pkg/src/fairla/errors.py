"""Exception hierarchy shared by every fairla module."""


class FairLAError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class StabilityError(FairLAError):
    """Influence/decay spectral radius >= 1 and no override given."""

    def __init__(self, radius: float):
        super().__init__(f"spectral radius of influence/decay is {radius:.4f} >= 1; "
                         "process may explode (pass allow_unstable=True to override)")
        self.radius = radius


class FitError(FairLAError):
    pass


class ConvergenceError(FitError):
    """Raised when the optimizer hits its iteration cap; ``best`` holds the last iterate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class FeasibilityError(FairLAError):
    pass


class ParseError(FairLAError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    pass


class UndefinedMetricError(FairLAError):
    pass


class BudgetUnderflowError(FairLAError):
    pass


class IntegrityError(FairLAError):
    """Checkpoint content does not match its recorded hash, or is unreadable."""


class ConfigError(Exception):
    """Invalid experiment configuration (CLI exit code 2)."""
