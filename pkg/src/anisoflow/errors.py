"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its exit-status taxonomy without inspecting messages.
"""


class AnisoFlowError(Exception):
    exit_code = 1


class UsageError(AnisoFlowError, ValueError):
    """Bad arguments: dimension mismatch, CFL violation, mismatched grids."""

    exit_code = 2


class ConfigError(UsageError):
    exit_code = 2


class SingularityError(AnisoFlowError, ValueError):
    """Derivative requested where the model is not differentiable (p = 0)."""

    exit_code = 3


class DomainError(AnisoFlowError, ValueError):
    exit_code = 2


class NumericalFailure(AnisoFlowError, ArithmeticError):
    """Non-finite values produced during time stepping."""

    exit_code = 3

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConvergenceError(AnisoFlowError, RuntimeError):
    exit_code = 3

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = [] if history is None else list(history)


class CheckFailure(AnisoFlowError, AssertionError):
    """A verification check did not hold."""

    exit_code = 4
