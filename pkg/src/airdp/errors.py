"""Exception and warning types shared across the package."""


class ParameterDomainError(ValueError):
    """An argument lies outside the formula's mathematical domain."""


class InfeasibleConcentrationError(ParameterDomainError):
    """The count-concentration window is empty: the requested failure
    probability sits at or below its admissible floor, equivalently the
    expected participant count does not exceed the Hoeffding slack."""


class EnumerationSizeError(ValueError):
    """Exact distribution requested for a problem too large to enumerate."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class ExperimentError(RuntimeError):
    """An experiment run failed after configuration was accepted."""


class ConcentrationShortfallWarning(UserWarning):
    """Co-participation margin came out negative and was clamped to zero."""


class BudgetOverflowWarning(UserWarning):
    """A privacy exponent exceeded the overflow guard; epsilon reported as
    infinity."""
