import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadcast.errors import GapDetected, NonMonotonic, NonPositiveValue, ParseError
from loadcast.series import (
    LoadSeries,
    PeriodStamp,
    advance,
    log_view,
    offset_between,
    period_of_week,
    read_csv,
    write_csv,
)


def test_advance_into_leap_day():
    s = PeriodStamp(date(2008, 2, 28), 48)
    assert advance(s, 1) == PeriodStamp(date(2008, 2, 29), 1)


def test_advance_six_year_lag_lands_on_2002():
    # the New-Year's-Day Rule-2 lag spans five ordinary years plus 2004
    s = PeriodStamp(date(2008, 1, 1), 1)
    assert advance(s, -(5 * 365 + 366) * 48) == PeriodStamp(date(2002, 1, 1), 1)


def test_advance_zero_is_identity():
    s = PeriodStamp(date(2010, 7, 4), 17)
    assert advance(s, 0) == s


stamps = st.builds(
    PeriodStamp,
    st.dates(min_value=date(1990, 1, 1), max_value=date(2150, 12, 31)),
    st.integers(min_value=1, max_value=48),
)


@given(stamps, st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
@settings(max_examples=200)
def test_advance_group_action(s, a, b):
    assert advance(advance(s, a), b) == advance(s, a + b)


@given(stamps)
def test_advance_full_day_keeps_period(s):
    nxt = advance(s, 48)
    assert nxt.period == s.period
    assert (nxt.date - s.date).days == 1


@given(stamps)
def test_period_of_week_weekly_invariant(s):
    assert period_of_week(advance(s, 336)) == period_of_week(s)


def test_period_of_week_anchors():
    assert period_of_week(PeriodStamp(date(2001, 1, 1), 1)) == 1  # a Monday
    assert period_of_week(PeriodStamp(date(2001, 1, 7), 48)) == 336  # Sunday
    # Wednesday period 10 -> 2*48 + 10
    assert period_of_week(PeriodStamp(date(2001, 1, 3), 10)) == 106


def test_offset_between_roundtrip():
    a = PeriodStamp(date(2004, 2, 28), 40)
    b = advance(a, 12345)
    assert offset_between(a, b) == 12345


def test_log_view_values():
    s = LoadSeries(PeriodStamp(date(2001, 1, 1), 1), [1.0, math.e, math.e**2])
    np.testing.assert_allclose(log_view(s), [0.0, 1.0, 2.0], atol=1e-12)


def test_log_roundtrip():
    vals = np.random.default_rng(0).uniform(10, 1e5, size=500)
    s = LoadSeries(PeriodStamp(date(2001, 1, 1), 1), vals)
    np.testing.assert_allclose(np.exp(s.log_values()), vals, rtol=1e-12)


def test_nonpositive_rejected():
    with pytest.raises(NonPositiveValue):
        LoadSeries(PeriodStamp(date(2001, 1, 1), 1), [1.0, 0.0, 2.0])


def _write_rows(path, rows, header="date,period,load_mw"):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(str(x) for x in r) + "\n")


def test_read_csv_two_days(tmp_path):
    p = tmp_path / "ok.csv"
    rows = []
    stamp = PeriodStamp(date(2001, 1, 1), 1)
    for i in range(96):
        rows.append((stamp.date.isoformat(), stamp.period, 100.0 + i))
        stamp = advance(stamp, 1)
    _write_rows(p, rows)
    s = read_csv(p)
    assert len(s) == 96
    assert s.start == PeriodStamp(date(2001, 1, 1), 1)
    assert s.end == PeriodStamp(date(2001, 1, 2), 48)


def test_read_csv_duplicate_row(tmp_path):
    p = tmp_path / "dup.csv"
    _write_rows(p, [("2001-01-01", 1, 10.0), ("2001-01-01", 1, 11.0)])
    with pytest.raises(NonMonotonic):
        read_csv(p)


def test_read_csv_gap(tmp_path):
    p = tmp_path / "gap.csv"
    _write_rows(p, [("2001-01-01", 1, 10.0), ("2001-01-01", 3, 11.0)])
    with pytest.raises(GapDetected, match="row 2"):
        read_csv(p)


def test_read_csv_zero_load(tmp_path):
    p = tmp_path / "zero.csv"
    _write_rows(p, [("2001-01-01", 1, 10.0), ("2001-01-01", 2, 0)])
    with pytest.raises(NonPositiveValue, match="line 3"):
        read_csv(p)


def test_read_csv_bad_header(tmp_path):
    p = tmp_path / "hdr.csv"
    _write_rows(p, [("2001-01-01", 1, 10.0)], header="time,value")
    with pytest.raises(ParseError):
        read_csv(p)


def test_csv_roundtrip(tmp_path):
    vals = np.random.default_rng(1).uniform(1e3, 1e5, size=300)
    s = LoadSeries(PeriodStamp(date(2003, 5, 7), 13), vals, name="rt")
    p = tmp_path / "rt.csv"
    write_csv(s, p, header_comment="config=deadbeef")
    s2 = read_csv(p, name="rt")
    assert s2.start == s.start
    np.testing.assert_array_equal(s2.values, s.values)
