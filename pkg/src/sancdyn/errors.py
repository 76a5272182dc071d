class SancdynError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SancdynError, ValueError):
    """A model parameter or state violates its domain constraints."""


class DivergenceError(SancdynError, ArithmeticError):
    """A requested limit does not exist because the dynamics diverge."""


class EstimationError(SancdynError, ArithmeticError):
    """An empirical estimate is undefined for the supplied data."""


class ConfigurationError(SancdynError, ValueError):
    """Inconsistent combination of options."""


class ScenarioError(SancdynError, ValueError):
    """A scenario document is malformed or violates a field constraint.

    ``field`` names the offending key (``None`` for document-level problems).
    """

    def __init__(self, field, message):
        self.field = field
        self.message = message
        prefix = f"{field}: " if field else ""
        super().__init__(prefix + message)
