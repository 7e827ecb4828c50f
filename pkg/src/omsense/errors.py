"""Exception types raised across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of a physical formula."""


class UnsupportedConfigurationError(ValueError):
    """The parameters describe a system the model does not cover."""


class UsageError(ValueError):
    """A function was called with arguments that violate its contract."""


class NoPhysicalSolutionError(ArithmeticError):
    """No non-negative steady-state intensity exists."""


class UndefinedBandwidthError(ArithmeticError):
    """The sensitivity profile is flat, so no bandwidth can be read off."""


class IntegrationError(RuntimeError):
    """Base class for failures of the mean-field integrator."""

    def __init__(self, message, last_state=None, t=None):
        super().__init__(message)
        self.last_state = last_state
        self.t = t


class DivergenceError(IntegrationError):
    """The state norm exceeded the configured bound."""


class StiffnessError(IntegrationError):
    """The adaptive step size underflowed."""


class SettleError(IntegrationError):
    """No fixed point was reached before the time cutoff."""


class SweepError(RuntimeError):
    """A quasi-static sweep failed at a given step."""

    def __init__(self, message, step, value, cause=None):
        super().__init__(message)
        self.step = step
        self.value = value
        self.cause = cause


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where = f" [key '{key}'" + (f", line {line}" if line is not None else "") + "]"
        super().__init__(message + where)
        self.key = key
        self.line = line
