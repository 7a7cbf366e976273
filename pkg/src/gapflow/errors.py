"""Exception types shared across the package."""


class GapflowError(Exception):
    """Base class for all package errors."""


class ConfigError(GapflowError):
    """Invalid configuration or geometry parameters.

    ``field`` names the offending entry (dotted path for run configs,
    e.g. ``"time.dt"``).
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericalError(GapflowError):
    """A scalar or linear solve failed to reach its tolerance.

    Carries the last residual so callers can report how close it got.
    """

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)


class StepFailure(GapflowError):
    """An implicit time step did not converge.

    Carries the step index and the last Newton residual.
    """

    def __init__(self, message, step_index=None, residual=None):
        self.step_index = step_index
        self.residual = residual
        parts = [message]
        if step_index is not None:
            parts.append(f"step={step_index}")
        if residual is not None:
            parts.append(f"residual={residual:.3e}")
        super().__init__(", ".join(parts))


class PreconditionError(GapflowError):
    """Input state violates an operation's precondition."""


class UnsupportedRegimeError(GapflowError):
    """Operation is not defined for the requested energy regime."""
