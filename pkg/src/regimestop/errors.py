"""Exception and warning types shared across the package."""


class RegimeStopError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveParameter(RegimeStopError):
    """A model parameter is outside its admissible range; names the field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegeneratePayoff(RegimeStopError):
    """Both the strike and the fixed cost are zero (threshold degenerates to 0)."""


class AssumptionViolated(RegimeStopError):
    """The discounting assumption r > max(mu0, mu1) does not hold."""


class ParamsFileError(RegimeStopError):
    """A parameter file could not be parsed; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class BracketFailure(RegimeStopError):
    """A root bracket lost its sign guarantees (parameter pathology or overflow)."""


class SingularDenominator(RegimeStopError):
    """A closed-form denominator vanished; upstream invariants must have failed."""


class NonPositiveThreshold(RegimeStopError):
    """The threshold formula produced a value outside (0, inf) or below K-tilde."""


class DomainError(RegimeStopError):
    """Evaluation requested outside the state space (x must be positive)."""


class AssumptionWarning(UserWarning):
    """Permissive-mode notice that r > max(mu0, mu1) does not hold."""
