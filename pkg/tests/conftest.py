import numpy as np
import pytest

from loadcast.framing import build_frame
from loadcast.gbcal import Calendar, NormalCalendar
from loadcast.rules import RuleId, build_table
from loadcast.series import LoadSeries, PeriodStamp
from loadcast.synth import SynthConfig, generate

YEAR = 365 * 48


@pytest.fixture(scope="session")
def gb_calendar():
    return Calendar()


@pytest.fixture(scope="session")
def synth3(gb_calendar):
    """Three-year synthetic series with its R3 frame (shared, read-only)."""
    series, labels = generate(SynthConfig(years=3, seed=11))
    table = build_table(series.start.date, series.end.date, RuleId.R3, gb_calendar)
    return build_frame(series, gb_calendar, table)


@pytest.fixture(scope="session")
def flat_frame():
    """Noise-free purely weekly series under an all-normal calendar.

    y = level + intraday + intraweek exactly; with exact seeds every
    filter error is zero.
    """
    rng = np.random.default_rng(3)
    level = 10.0
    d_pat = 0.3 * np.sin(2 * np.pi * np.arange(48) / 48.0)
    d_pat -= d_pat.mean()
    w_pat = 0.1 * np.sin(2 * np.pi * np.arange(336) / 336.0)
    w_pat -= w_pat.mean()
    n = int(2.5 * YEAR)
    from datetime import date

    start = PeriodStamp(date(2001, 1, 1), 1)
    pod = np.arange(n) % 48
    pow_ = (start.date.weekday() * 48 + np.arange(n)) % 336
    ylog = level + d_pat[pod] + w_pat[pow_]
    series = LoadSeries(start, np.exp(ylog), "flat")
    cal = NormalCalendar()
    table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
    return build_frame(series, cal, table)
