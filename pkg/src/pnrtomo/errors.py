"""Exception hierarchy shared by the library and the command line."""


class PnrTomoError(Exception):
    """Base class for all package errors."""


class InvariantViolation(PnrTomoError, ValueError):
    """An object failed a structural or physical invariant (symplecticity,
    physicality, complete positivity, dimension agreement)."""


class MissingMeasurement(PnrTomoError, KeyError):
    """A reconstruction step needed a setting absent from the result set."""

    def __str__(self):
        return Exception.__str__(self)


class InconsistentMeasurements(PnrTomoError, ValueError):
    """Measured averages admit no real solution (e.g. negative discriminant)."""


class ConfigError(PnrTomoError, ValueError):
    """An experiment configuration could not be parsed or interpreted."""
