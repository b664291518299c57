"""Rule-based triple-seasonal forecasting of half-hourly electricity load."""

from .series import LoadSeries, PeriodStamp, advance, period_of_week, read_csv, write_csv
from .gbcal import Calendar, NormalCalendar, SpecialDayKind, classify, easter_sunday
from .rules import AnnualLagTable, RuleId, build_table, normal_lag

__version__ = "0.1.0"

__all__ = [
    "LoadSeries",
    "PeriodStamp",
    "advance",
    "period_of_week",
    "read_csv",
    "write_csv",
    "Calendar",
    "NormalCalendar",
    "SpecialDayKind",
    "classify",
    "easter_sunday",
    "AnnualLagTable",
    "RuleId",
    "build_table",
    "normal_lag",
    "__version__",
]
