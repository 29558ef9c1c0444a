"""Exception types shared across the package."""


class HeislabError(Exception):
    """Base class for all package errors."""


class InvalidArgument(HeislabError, ValueError):
    """Malformed input: dimension mismatch, non-finite value, bad radius."""


class DomainError(HeislabError, ValueError):
    """Evaluation requested at a point where the quantity is undefined."""


class ConstantsSearchFailure(HeislabError, RuntimeError):
    """No admissible constant was found within the search range."""


class GridTooSmall(HeislabError, ValueError):
    """A stencil foot left the computational box."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SolverFailure(HeislabError, RuntimeError):
    """The linear solve did not reach the requested residual."""

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class InvalidScenario(HeislabError, ValueError):
    """A scenario violates a hypothesis required by the estimate it targets."""


class ConfigError(HeislabError, ValueError):
    """Configuration file could not be parsed or validated."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
