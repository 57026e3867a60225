"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid configuration: bad key, out-of-range value, unusable setup."""


class NumericalError(Exception):
    """A numerical routine failed to converge or produced an invalid result."""


class IntegrationError(Exception):
    """Time integration produced NaN/Inf.  Carries the simulation time."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
