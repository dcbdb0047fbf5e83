"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class LapsliceError(Exception):
    """Base class for all library errors."""


class ConfigError(LapsliceError):
    """Invalid configuration or usage. Collects one or more messages."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(LapsliceError):
    """Bad or inconsistent input data."""


class ParseError(DataError):
    """File failed to parse. Carries the path and 1-based line number."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class MetricUndefinedError(DataError):
    """A homophily metric has an empty denominator on the given subset."""


class NumericError(LapsliceError):
    """Numerical failure (divergence, size cap exceeded)."""


class CapExceededError(NumericError):
    """Dense work requested beyond the configured size cap."""


class TrainingDivergedError(NumericError):
    """Training produced non-finite loss or weights."""
