from math import comb


class SignalRecoveryError(Exception):
    """Base class for all library errors. `exit_code` is what the CLI returns."""

    exit_code = 5


class InvalidInputError(SignalRecoveryError, ValueError):
    exit_code = 2


class ConfigError(SignalRecoveryError, ValueError):
    exit_code = 2


class MatrixFormatError(SignalRecoveryError):
    """Raised when a .mat/.vec/meta.json file cannot be parsed."""

    exit_code = 1

    def __init__(self, path, message: str, line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")


class BudgetExceededError(SignalRecoveryError):
    """Raised before enumerating a support size whose count would pass the ceiling."""

    exit_code = 3

    def __init__(self, n: int, t: int, budget: int, used: int):
        self.n = n
        self.t = t
        self.budget = budget
        self.used = used
        self.required = comb(n, t)
        super().__init__(
            f"enumeration budget exceeded: C({n}, {t}) = {self.required} supports "
            f"with {used} already evaluated, ceiling is {budget}"
        )


class InfeasibleError(SignalRecoveryError):
    exit_code = 3


class ConvergenceError(SignalRecoveryError):
    exit_code = 4


class InvariantViolation(SignalRecoveryError, AssertionError):
    exit_code = 5
