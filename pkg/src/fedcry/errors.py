"""Exception hierarchy.

``DataError`` subclasses signal bad inputs (the CLI maps them to exit code 2);
everything else is a programming or configuration problem.
"""


class FedCryError(Exception):
    """Base class for all package errors."""


class DataError(FedCryError):
    """Input data cannot be processed as given."""


class ConfigError(FedCryError):
    """An invalid configuration value."""


class EmptySignal(DataError):
    pass


class SignalTooShort(DataError):
    pass


class InvalidFilterSpec(ConfigError):
    pass


class InvalidGain(ConfigError):
    pass


class DegenerateRir(DataError):
    pass


class RateMismatch(DataError):
    pass


class InvalidConfig(ConfigError):
    pass


class DegenerateLabels(DataError):
    pass


class InvalidK(ConfigError):
    pass


class DimensionMismatch(DataError):
    pass


class InvalidLabel(DataError):
    pass


class EmptyDataset(DataError):
    pass


class NonFiniteGradient(FedCryError):
    pass


class NotEnoughData(DataError):
    pass


class MissingRir(ConfigError):
    pass


class StratifyError(DataError):
    pass


class UndefinedMetric(DataError):
    def __init__(self, missing_class: str):
        super().__init__(f"no examples of class {missing_class!r}; recall is undefined")
        self.missing_class = missing_class


class CorpusError(DataError):
    """Raised (or collected) for WAV files that could not be read."""

    def __init__(self, message: str, skipped: list | None = None):
        super().__init__(message)
        self.skipped = list(skipped or [])


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class NoVoiceDetected(DataError):
    pass
