"""Exception types shared across the package."""


class LoadcastError(Exception):
    """Base class for all loadcast errors."""


class ParseError(LoadcastError):
    """A CSV row could not be parsed."""


class GapDetected(LoadcastError):
    """A half-hourly period is missing from an ingested series."""


class NonMonotonic(LoadcastError):
    """Rows are not strictly increasing in (date, period)."""


class NonPositiveValue(LoadcastError):
    """A load value is zero or negative, so the log transform is undefined."""


class YearOutOfRange(LoadcastError):
    """A date falls outside the supported calendar range."""


class InsufficientHistory(LoadcastError):
    """Not enough past data to resolve a lag, seed a model, or fit."""


class MissingAnnualIndex(LoadcastError):
    """An intrayear index lookup points before the start of history."""


class SeriesTooShort(LoadcastError):
    """The series is shorter than an operation's warm-up requirement."""


class EmptyMask(LoadcastError):
    """An error metric was requested over an empty target subset."""


class MismatchedHorizons(LoadcastError):
    """Forecast sets being combined do not share origin and horizons."""


class ConfigInvalid(LoadcastError):
    """A configuration file or object violates its schema."""


class Divergence(LoadcastError):
    """Training produced a non-finite loss."""


class EmptyClassWarning(UserWarning):
    """One residual class is empty; the likelihood degrades to one variance."""
