"""Intrayear lag selection: the normal-day lag and special-day Rules 1-4.

Every lag is a whole number of days times 48 half-hours, so the referenced
observation always shares the period of day with the target.  Lags are
exact calendar-date differences, which makes them leap-year aware by
construction.  Rule matches are restricted to earlier calendar years; when
a rule cannot be satisfied within the available history it reverts to
Rule 1, and a day is flagged unusable only when even Rule 1 reaches back
before the start of history.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterator

import numpy as np

from .errors import InsufficientHistory
from .gbcal import (
    BANK_HOLIDAY_MONDAY_KINDS,
    EASTER_KINDS,
    Calendar,
    DayClassification,
    SpecialDayKind,
    clock_change_dates,
    holiday_date,
)
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK, PeriodStamp, advance

NORMAL_LAG = 52 * PERIODS_PER_WEEK
LONG_NORMAL_LAG = 53 * PERIODS_PER_WEEK

#: Width of the window around each clock-change inside which the 53-week
#: lag may replace the 52-week one.
CLOCK_WINDOW_DAYS = 28

_CHRISTMAS_PERIOD_KINDS = frozenset(
    {
        SpecialDayKind.CHRISTMAS_DAY,
        SpecialDayKind.BOXING_DAY,
        SpecialDayKind.PROXIMITY_DAY,
        SpecialDayKind.OTHER_CHRISTMAS_PERIOD,
    }
)


class RuleId(enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"


def _is_weekend(d: date) -> bool:
    return d.weekday() >= 5


def normal_lag(d: date) -> int:
    """Intrayear lag for a normal day, in half-hours.

    52 weeks by default; 53 weeks when the 52-week lag would land on the
    opposite side of the previous year's clock-change while ``d`` sits
    within the window around its own clock-change.
    """
    candidates: list[tuple[date, int, int]] = []
    for y in (d.year - 1, d.year, d.year + 1):
        try:
            s, e = clock_change_dates(y)
        except Exception:
            continue
        candidates.append((s, 0, y))
        candidates.append((e, 1, y))
    cc, which, year = min(candidates, key=lambda c: abs((d - c[0]).days))
    if abs((d - cc).days) >= CLOCK_WINDOW_DAYS:
        return NORMAL_LAG
    prev_cc = clock_change_dates(year - 1)[which]
    side = d >= cc
    if ((d - timedelta(days=364)) >= prev_cc) == side:
        return NORMAL_LAG
    if ((d - timedelta(days=371)) >= prev_cc) == side:
        return LONG_NORMAL_LAG
    return NORMAL_LAG


def rule1_match(d: date, cls: DayClassification) -> date:
    """Same special day, previous year."""
    if cls.kind in BANK_HOLIDAY_MONDAY_KINDS or cls.kind in EASTER_KINDS:
        return holiday_date(cls.kind, d.year - 1)
    return d.replace(year=d.year - 1)


def _pd_candidates_before(year: int, history_start: date) -> Iterator[date]:
    """Proximity-day dates of years before ``year``, most recent first."""
    for y in range(year - 1, history_start.year - 1, -1):
        for day in (30, 29, 28, 27, 24, 23, 22, 21):
            c = date(y, 12, day)
            if c >= history_start:
                yield c


def rule2_match(d: date, cls: DayClassification, cal: Calendar, history_start: date) -> date | None:
    """Same special day on the same day of the week, nearest earlier year.

    Days 21-31 December are pooled as one kind.  Fixed-weekday holidays
    reduce to Rule 1.  Returns None when no admissible match exists.
    """
    kind = cls.kind
    if kind in BANK_HOLIDAY_MONDAY_KINDS or kind in EASTER_KINDS:
        return rule1_match(d, cls)
    if kind in _CHRISTMAS_PERIOD_KINDS:
        for y in range(d.year - 1, history_start.year - 1, -1):
            for day in range(31, 20, -1):
                c = date(y, 12, day)
                if c.weekday() == d.weekday() and c >= history_start:
                    return c
        return None
    for y in range(d.year - 1, history_start.year - 1, -1):
        c = holiday_date(kind, y)
        if c.weekday() == d.weekday() and c >= history_start:
            return c
    return None


def _easter_side(d: date, year: int) -> bool:
    """True when ``d`` falls before that year's summertime clock-change."""
    return d < clock_change_dates(year)[0]


def rule3_match(d: date, cls: DayClassification, cal: Calendar, history_start: date) -> date | None:
    """Weekday/weekend-aware match; proximity days match side and bridging.

    Easter holidays use Rule 1 plus the same-clock-change-side condition.
    """
    kind = cls.kind
    if kind in BANK_HOLIDAY_MONDAY_KINDS:
        return rule1_match(d, cls)
    if kind in EASTER_KINDS:
        side = _easter_side(d, d.year)
        for y in range(d.year - 1, history_start.year - 1, -1):
            c = holiday_date(kind, y)
            if c >= history_start and _easter_side(c, y) == side:
                return c
        return None
    if kind is SpecialDayKind.PROXIMITY_DAY:
        want = (cls.proximity_side, _is_weekend(d), cls.is_bridging)
        for c in _pd_candidates_before(d.year, history_start):
            ccls = cal.classify(c)
            if ccls.kind is not SpecialDayKind.PROXIMITY_DAY:
                continue
            if (ccls.proximity_side, _is_weekend(c), ccls.is_bridging) == want:
                return c
        return None
    # Fixed-date specials: New Year's Day, 2 January, Christmas Day,
    # Boxing Day, 31 December.
    want_weekend = _is_weekend(d)
    for y in range(d.year - 1, history_start.year - 1, -1):
        c = holiday_date(kind, y)
        if c >= history_start and _is_weekend(c) == want_weekend:
            return c
    return None


def rule4_match(d: date, cls: DayClassification, cal: Calendar, history_start: date) -> date | None:
    """As Rule 3, with the weekday/weekend test replaced by the five-way
    intraday cycle class for all fixed-date specials (proximity days too)."""
    kind = cls.kind
    if kind in BANK_HOLIDAY_MONDAY_KINDS or kind in EASTER_KINDS:
        return rule3_match(d, cls, cal, history_start)
    if kind is SpecialDayKind.PROXIMITY_DAY:
        want = (cls.proximity_side, cls.cycle_class, cls.is_bridging)
        for c in _pd_candidates_before(d.year, history_start):
            ccls = cal.classify(c)
            if ccls.kind is not SpecialDayKind.PROXIMITY_DAY:
                continue
            if (ccls.proximity_side, ccls.cycle_class, ccls.is_bridging) == want:
                return c
        return None
    want_cycle = cls.cycle_class
    for y in range(d.year - 1, history_start.year - 1, -1):
        c = holiday_date(kind, y)
        if c >= history_start and cal.classify(c).cycle_class == want_cycle:
            return c
    return None


_MATCHERS = {
    RuleId.R2: rule2_match,
    RuleId.R3: rule3_match,
    RuleId.R4: rule4_match,
}


def special_day_lag(
    d: date, rule: RuleId, cal: Calendar, history_start: date
) -> tuple[int, date] | None:
    """Lag (half-hours) and matched date for a special day, or None when
    even Rule 1 reaches back before ``history_start``."""
    cls = cal.classify(d)
    if not cls.is_special:
        raise ValueError(f"{d} is not a special day")
    matched: date | None = None
    if rule is not RuleId.R1:
        matched = _MATCHERS[rule](d, cls, cal, history_start)
    if matched is None or matched < history_start:
        matched = rule1_match(d, cls)
    if matched < history_start:
        return None
    return (d - matched).days * PERIODS_PER_DAY, matched


def rule1_lag(d: date, cal: Calendar, history_start: date | None = None) -> int:
    lag = special_day_lag(d, RuleId.R1, cal, history_start or date.min)
    if lag is None:
        raise InsufficientHistory(f"Rule 1 match for {d} precedes history start")
    return lag[0]


def rule2_lag(d: date, cal: Calendar, history_start: date) -> int:
    out = special_day_lag(d, RuleId.R2, cal, history_start)
    if out is None:
        raise InsufficientHistory(f"no Rule 2 or Rule 1 match for {d} in history")
    return out[0]


def rule3_lag(d: date, cal: Calendar, history_start: date) -> int:
    out = special_day_lag(d, RuleId.R3, cal, history_start)
    if out is None:
        raise InsufficientHistory(f"no Rule 3 or Rule 1 match for {d} in history")
    return out[0]


def rule4_lag(d: date, cal: Calendar, history_start: date) -> int:
    out = special_day_lag(d, RuleId.R4, cal, history_start)
    if out is None:
        raise InsufficientHistory(f"no Rule 4 or Rule 1 match for {d} in history")
    return out[0]


@dataclass
class AnnualLagTable:
    """Per-date intrayear lags (half-hours) over a span, with provenance.

    The lag is constant across the 48 periods of a day.  Days whose lag
    cannot be resolved even by Rule 1 (first year of data) are flagged
    unusable and excluded from likelihoods.
    """

    rule: RuleId
    start: date
    end: date
    history_start: date
    lags: dict[date, int] = field(default_factory=dict)
    matched: dict[date, date] = field(default_factory=dict)
    unusable: set[date] = field(default_factory=set)

    def lag_for_date(self, d: date) -> int:
        if d in self.unusable:
            raise InsufficientHistory(f"no resolvable intrayear lag for {d}")
        try:
            return self.lags[d]
        except KeyError:
            raise InsufficientHistory(f"{d} outside lag table span") from None

    def lag_at(self, stamp: PeriodStamp) -> int:
        return self.lag_for_date(stamp.date)

    def lag_array(self, start: PeriodStamp, n: int) -> np.ndarray:
        """Lags aligned to series offsets; -1 marks unusable/uncovered."""
        out = np.empty(n, dtype=np.int64)
        stamp = start
        i = 0
        while i < n:
            d = stamp.date
            lag = self.lags.get(d, -1) if d not in self.unusable else -1
            take = min(PERIODS_PER_DAY - stamp.period + 1, n - i)
            out[i : i + take] = lag
            i += take
            stamp = advance(stamp, take)
        return out

    def rows(self) -> Iterator[tuple[date, int, int, date | None]]:
        """(date, period, lag, matched_date) rows for audit dumps."""
        d = self.start
        while d <= self.end:
            lag = -1 if d in self.unusable else self.lags[d]
            m = self.matched.get(d)
            for p in range(1, PERIODS_PER_DAY + 1):
                yield d, p, lag, m
            d += timedelta(days=1)


def build_table(
    span_start: date,
    span_end: date,
    rule: RuleId,
    cal: Calendar,
    history_start: date | None = None,
) -> AnnualLagTable:
    """Lag table over [span_start, span_end] under one rule.

    ``history_start`` defaults to ``span_start`` and bounds how far back
    rule matches may reach.
    """
    hs = history_start or span_start
    table = AnnualLagTable(rule=rule, start=span_start, end=span_end, history_start=hs)
    d = span_start
    while d <= span_end:
        cls = cal.classify(d)
        if cls.is_special:
            out = special_day_lag(d, rule, cal, hs)
            if out is None:
                table.unusable.add(d)
            else:
                table.lags[d] = out[0]
                table.matched[d] = out[1]
        else:
            lag = normal_lag(d)
            table.lags[d] = lag
            table.matched[d] = d - timedelta(days=lag // PERIODS_PER_DAY)
        d += timedelta(days=1)
    return table
