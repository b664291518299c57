"""Great-Britain special-day calendar.

Classifies every date as normal or special: New Year's Day, the day after,
Good Friday, Easter Monday, three bank holiday Mondays, and the Christmas
period (21-31 December) with proximity/bridging sub-classes.  25/26 December
keep their classification even on weekends; substitute bank holidays are not
modelled.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from datetime import date, timedelta
from functools import lru_cache

from .errors import InsufficientHistory, ParseError, YearOutOfRange

MIN_YEAR = 1900
MAX_YEAR = 2200


class SpecialDayKind(enum.Enum):
    NEW_YEARS_DAY = "new_years_day"
    DAY_AFTER_NEW_YEAR = "day_after_new_year"
    GOOD_FRIDAY = "good_friday"
    EASTER_MONDAY = "easter_monday"
    EARLY_MAY_BANK_HOLIDAY = "early_may_bank_holiday"
    SPRING_BANK_HOLIDAY = "spring_bank_holiday"
    SUMMER_BANK_HOLIDAY = "summer_bank_holiday"
    CHRISTMAS_DAY = "christmas_day"
    BOXING_DAY = "boxing_day"
    PROXIMITY_DAY = "proximity_day"
    OTHER_CHRISTMAS_PERIOD = "other_christmas_period"


#: Holidays pinned to a calendar date.
FIXED_DATE_KINDS = frozenset(
    {
        SpecialDayKind.NEW_YEARS_DAY,
        SpecialDayKind.DAY_AFTER_NEW_YEAR,
        SpecialDayKind.CHRISTMAS_DAY,
        SpecialDayKind.BOXING_DAY,
        SpecialDayKind.OTHER_CHRISTMAS_PERIOD,
    }
)

#: Holidays that fall on the same weekday every year.
FIXED_WEEKDAY_KINDS = frozenset(
    {
        SpecialDayKind.GOOD_FRIDAY,
        SpecialDayKind.EASTER_MONDAY,
        SpecialDayKind.EARLY_MAY_BANK_HOLIDAY,
        SpecialDayKind.SPRING_BANK_HOLIDAY,
        SpecialDayKind.SUMMER_BANK_HOLIDAY,
    }
)

EASTER_KINDS = frozenset({SpecialDayKind.GOOD_FRIDAY, SpecialDayKind.EASTER_MONDAY})

BANK_HOLIDAY_MONDAY_KINDS = frozenset(
    {
        SpecialDayKind.EARLY_MAY_BANK_HOLIDAY,
        SpecialDayKind.SPRING_BANK_HOLIDAY,
        SpecialDayKind.SUMMER_BANK_HOLIDAY,
    }
)


class ProximitySide(enum.Enum):
    PRECEDES_CHRISTMAS = "precedes_christmas"  # 21-24 December
    FOLLOWS_BOXING = "follows_boxing"  # 27-30 December


class CycleClass(enum.Enum):
    """Five intraday-profile classes; Tue/Wed/Thu share one cycle."""

    MON = "Mon"
    TWT = "TWT"
    FRI = "Fri"
    SAT = "Sat"
    SUN = "Sun"


_CYCLE_BY_WEEKDAY = {
    0: CycleClass.MON,
    1: CycleClass.TWT,
    2: CycleClass.TWT,
    3: CycleClass.TWT,
    4: CycleClass.FRI,
    5: CycleClass.SAT,
    6: CycleClass.SUN,
}


@dataclass(frozen=True)
class DayClassification:
    date: date
    day_of_week: int  # 0 = Monday .. 6 = Sunday
    is_special: bool
    kind: SpecialDayKind | None
    proximity_side: ProximitySide | None
    is_bridging: bool | None  # only meaningful for proximity days
    cycle_class: CycleClass

    @property
    def is_weekend(self) -> bool:
        return self.day_of_week >= 5


def _check_year(year: int) -> None:
    if not MIN_YEAR <= year <= MAX_YEAR:
        raise YearOutOfRange(f"year {year} outside supported range {MIN_YEAR}..{MAX_YEAR}")


@lru_cache(maxsize=1024)
def easter_sunday(year: int) -> date:
    """Gregorian Easter Sunday, via the anonymous computus."""
    _check_year(year)
    a = year % 19
    b, c = divmod(year, 100)
    d, e = divmod(b, 4)
    f = (b + 8) // 25
    g = (b - f + 1) // 3
    h = (19 * a + b - d - g + 15) % 30
    i, k = divmod(c, 4)
    l = (32 + 2 * e + 2 * i - h - k) % 7
    m = (a + 11 * h + 22 * l) // 451
    month, day = divmod(h + l - 7 * m + 114, 31)
    return date(year, month, day + 1)


def _last_weekday_of_month(year: int, month: int, weekday: int) -> date:
    last_day = date(year + (month == 12), month % 12 + 1, 1) - timedelta(days=1)
    return last_day - timedelta(days=(last_day.weekday() - weekday) % 7)


def _first_weekday_of_month(year: int, month: int, weekday: int) -> date:
    first = date(year, month, 1)
    return first + timedelta(days=(weekday - first.weekday()) % 7)


def clock_change_dates(year: int) -> tuple[date, date]:
    """GB summertime start and end: last Sundays of March and October."""
    _check_year(year)
    return (
        _last_weekday_of_month(year, 3, 6),
        _last_weekday_of_month(year, 10, 6),
    )


@lru_cache(maxsize=1024)
def _holiday_dates(year: int) -> dict[SpecialDayKind, date]:
    """The seven non-Christmas-period special days of a year."""
    _check_year(year)
    easter = easter_sunday(year)
    return {
        SpecialDayKind.NEW_YEARS_DAY: date(year, 1, 1),
        SpecialDayKind.DAY_AFTER_NEW_YEAR: date(year, 1, 2),
        SpecialDayKind.GOOD_FRIDAY: easter - timedelta(days=2),
        SpecialDayKind.EASTER_MONDAY: easter + timedelta(days=1),
        SpecialDayKind.EARLY_MAY_BANK_HOLIDAY: _first_weekday_of_month(year, 5, 0),
        SpecialDayKind.SPRING_BANK_HOLIDAY: _last_weekday_of_month(year, 5, 0),
        SpecialDayKind.SUMMER_BANK_HOLIDAY: _last_weekday_of_month(year, 8, 0),
    }


def holiday_date(kind: SpecialDayKind, year: int) -> date:
    """Occurrence date of a special-day kind in a given year.

    Christmas-period kinds map to their fixed date; PROXIMITY_DAY has no
    single date and is rejected.
    """
    _check_year(year)
    if kind is SpecialDayKind.CHRISTMAS_DAY:
        return date(year, 12, 25)
    if kind is SpecialDayKind.BOXING_DAY:
        return date(year, 12, 26)
    if kind is SpecialDayKind.OTHER_CHRISTMAS_PERIOD:
        return date(year, 12, 31)
    if kind is SpecialDayKind.PROXIMITY_DAY:
        raise ValueError("proximity days do not have a unique date per year")
    return _holiday_dates(year)[kind]


def same_special_day(kind: SpecialDayKind, before_year: int) -> date:
    """Most recent occurrence of ``kind`` strictly before its ``before_year`` one."""
    if before_year - 1 < MIN_YEAR:
        raise InsufficientHistory(f"no {kind.value} before year {before_year}")
    return holiday_date(kind, before_year - 1)


def _is_weekend(d: date) -> bool:
    return d.weekday() >= 5


def _proximity_parts(d: date) -> tuple[ProximitySide, bool] | None:
    """Side and bridging flag if ``d`` is a proximity day, else None.

    A proximity day bridges when it is the only day between a weekend and
    Christmas Day (24 Dec, Monday) or Boxing Day (27 Dec, Friday).
    """
    if d.month != 12:
        return None
    if 21 <= d.day <= 24:
        side = ProximitySide.PRECEDES_CHRISTMAS
        bridging = (
            d.day == 24 and not _is_weekend(d) and _is_weekend(d - timedelta(days=1))
        )
        return side, bridging
    if 27 <= d.day <= 30:
        side = ProximitySide.FOLLOWS_BOXING
        bridging = (
            d.day == 27 and not _is_weekend(d) and _is_weekend(d + timedelta(days=1))
        )
        return side, bridging
    return None


def _classify_uncached(d: date) -> DayClassification:
    _check_year(d.year)
    dow = d.weekday()
    cls = _CYCLE_BY_WEEKDAY[dow]

    kind: SpecialDayKind | None = None
    side: ProximitySide | None = None
    bridging: bool | None = None

    if d.month == 12 and 21 <= d.day <= 31:
        if d.day == 25:
            kind = SpecialDayKind.CHRISTMAS_DAY
        elif d.day == 26:
            kind = SpecialDayKind.BOXING_DAY
        elif d.day == 31:
            kind = SpecialDayKind.OTHER_CHRISTMAS_PERIOD
        else:
            kind = SpecialDayKind.PROXIMITY_DAY
            side, bridging = _proximity_parts(d)  # type: ignore[misc]
    else:
        for k, hd in _holiday_dates(d.year).items():
            if hd == d:
                kind = k
                break

    return DayClassification(
        date=d,
        day_of_week=dow,
        is_special=kind is not None,
        kind=kind,
        proximity_side=side,
        is_bridging=bridging,
        cycle_class=cls,
    )


class Calendar:
    """Computed GB calendar with optional per-date overrides.

    Overrides map a date to a SpecialDayKind (add/replace) or to None
    (force-normal).  Classification results are cached.
    """

    def __init__(self, overrides: dict[date, SpecialDayKind | None] | None = None):
        self._overrides = dict(overrides or {})
        self._cache: dict[date, DayClassification] = {}

    def classify(self, d: date) -> DayClassification:
        hit = self._cache.get(d)
        if hit is not None:
            return hit
        if d in self._overrides:
            out = self._apply_override(d, self._overrides[d])
        else:
            out = _classify_uncached(d)
        self._cache[d] = out
        return out

    def _apply_override(self, d: date, kind: SpecialDayKind | None) -> DayClassification:
        _check_year(d.year)
        side = bridging = None
        if kind is SpecialDayKind.PROXIMITY_DAY:
            parts = _proximity_parts(d)
            if parts is None:
                side, bridging = ProximitySide.PRECEDES_CHRISTMAS, False
            else:
                side, bridging = parts
        return DayClassification(
            date=d,
            day_of_week=d.weekday(),
            is_special=kind is not None,
            kind=kind,
            proximity_side=side,
            is_bridging=bridging,
            cycle_class=_CYCLE_BY_WEEKDAY[d.weekday()],
        )

    def is_special(self, d: date) -> bool:
        return self.classify(d).is_special

    def special_dates(self, year: int) -> list[date]:
        """All special dates of a year, in order."""
        out = []
        d = date(year, 1, 1)
        while d.year == year:
            if self.classify(d).is_special:
                out.append(d)
            d += timedelta(days=1)
        return out


class NormalCalendar(Calendar):
    """A calendar with no special days (plain, non-rule-based models)."""

    def classify(self, d: date) -> DayClassification:
        hit = self._cache.get(d)
        if hit is None:
            hit = self._apply_override(d, None)
            self._cache[d] = hit
        return hit


def read_overrides(path) -> dict[date, SpecialDayKind | None]:
    """Parse an override CSV ``date,kind``; kind ``normal`` removes a date."""
    out: dict[date, SpecialDayKind | None] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, raw in enumerate(reader, start=1):
            if not raw or raw[0].startswith("#"):
                continue
            if raw[0].strip() == "date":
                continue
            if len(raw) != 2:
                raise ParseError(f"override line {lineno}: expected 2 fields")
            try:
                d = date.fromisoformat(raw[0].strip())
            except ValueError as exc:
                raise ParseError(f"override line {lineno}: {exc}") from exc
            label = raw[1].strip()
            if label == "normal":
                out[d] = None
            else:
                try:
                    out[d] = SpecialDayKind(label)
                except ValueError as exc:
                    raise ParseError(
                        f"override line {lineno}: unknown kind {label!r}"
                    ) from exc
    return out


def classify(d: date) -> DayClassification:
    """Classify a date under the computed GB calendar (no overrides)."""
    return _DEFAULT.classify(d)


_DEFAULT = Calendar()
