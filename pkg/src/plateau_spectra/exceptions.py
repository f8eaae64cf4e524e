"""Exception hierarchy.  ``ConfigError`` maps to CLI exit code 2, everything
derived from ``NumericalError`` to exit code 1."""


class ConfigError(ValueError):
    """Invalid user input: bad config file, bad grid, bad potential."""


class NumericalError(RuntimeError):
    """A computation ran but did not produce a trustworthy number."""


class ConvergenceError(NumericalError):
    pass


class InstabilityError(NumericalError):
    pass


class PLDivergenceError(ValueError):
    """The PL ratio V / V'^2 is unbounded on the requested window."""

    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


class MixedExponentError(ValueError):
    """Left and right wings grow with different exponents."""
