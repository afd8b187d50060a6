"""Exception hierarchy shared by every tribokit module."""


class TribokitError(Exception):
    """Base class for all errors raised by tribokit."""


class InvalidInputError(TribokitError, ValueError):
    """Input data violates a documented invariant."""


class ConfigurationError(TribokitError, ValueError):
    """A meta-parameter or option is unusable for the given data."""


class DegenerateSignalError(InvalidInputError):
    """Signal carries no energy, so ratio features are undefined."""


class FitDomainError(InvalidInputError):
    """Exponential fit requested on nonpositive values."""


class SelectionError(TribokitError):
    """No candidate degradation feature could be scored."""


class SamplingError(TribokitError):
    """The MCMC target could not be evaluated."""


class LowConfidenceError(TribokitError):
    """Too many posterior samples never reach the RUL threshold."""

    def __init__(self, message, censored_fraction):
        super().__init__(message)
        self.censored_fraction = censored_fraction


class IngestionError(TribokitError):
    """Raw measurement files could not be discovered or parsed."""


class ParseError(IngestionError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class TimestampError(IngestionError):
    """Filename does not encode a year.month.day.hour.minute.second stamp."""


class SchemaError(IngestionError):
    """A persisted table does not match the expected layout."""


class RegistrationError(TribokitError):
    """Plug-in binding rejected by the registry."""


class PluginLookupError(TribokitError, LookupError):
    """No plug-in bound under the requested name."""


class PhaseError(TribokitError):
    """A pipeline phase failed; carries the phase name and partial timings."""

    def __init__(self, phase, cause, timings):
        super().__init__(f"{phase} failed: {cause}")
        self.phase = phase
        self.cause = cause
        self.timings = timings
