"""Exception hierarchy shared across the package."""


class AimkitError(Exception):
    """Base class for all errors raised by aimkit."""


class ParameterError(AimkitError, ValueError):
    """An argument is outside the operation's domain."""


class CapacityError(AimkitError):
    """An exact/exhaustive routine was asked to go past its enumeration limit."""


class ConfigError(AimkitError):
    """A configuration (experiment, budget vs. candidates, checkpoint paths) is unusable."""


class GraphParseError(AimkitError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class GraphValidationError(AimkitError, ValueError):
    """Graph data violates a structural or probability-range invariant."""


class ContractViolation(AimkitError):
    """Shapes or cached state handed to a numerical routine do not match."""


class EnvError(AimkitError):
    """The RL environment was driven past a terminal or infeasible state."""
