"""Offset-aligned views of a load series under a calendar and lag table.

Models and the evaluation harness all consume the same per-period arrays:
log-load, period-of-day/week indices (0-based), the special-day mask, and
the intrayear lag.  Building them once per run keeps the recursive
kernels free of calendar logic.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .gbcal import Calendar
from .rules import AnnualLagTable
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK, LoadSeries, PeriodStamp


@dataclass
class Frame:
    """A series realised into model-ready arrays."""

    series: LoadSeries
    cal: Calendar
    table: AnnualLagTable
    ylog: np.ndarray  # float64 (n,)
    pod: np.ndarray  # int64 (n,), 0..47
    pow_: np.ndarray  # int64 (n,), 0..335
    special: np.ndarray  # uint8 (n,)
    lag: np.ndarray  # int64 (n,), -1 where unresolvable

    @property
    def n(self) -> int:
        return self.ylog.size

    @property
    def start(self) -> PeriodStamp:
        return self.series.start

    def stamp_at(self, offset: int) -> PeriodStamp:
        return self.series.stamp_at(offset)


def build_frame(series: LoadSeries, cal: Calendar, table: AnnualLagTable) -> Frame:
    n = len(series)
    start = series.start
    base = start.period - 1
    idx = np.arange(n, dtype=np.int64)
    pod = (base + idx) % PERIODS_PER_DAY
    pow_ = (start.date.weekday() * PERIODS_PER_DAY + base + idx) % PERIODS_PER_WEEK

    n_days = (series.end.date - start.date).days + 1
    special_by_day = np.zeros(n_days, dtype=np.uint8)
    d = start.date
    for i in range(n_days):
        if cal.classify(d).is_special:
            special_by_day[i] = 1
        d += timedelta(days=1)
    day_index = (base + idx) // PERIODS_PER_DAY
    special = special_by_day[day_index]

    return Frame(
        series=series,
        cal=cal,
        table=table,
        ylog=series.log_values(),
        pod=pod,
        pow_=pow_,
        special=special,
        lag=table.lag_array(start, n),
    )


def slice_frame(frame: Frame, stop: int, name: str | None = None) -> Frame:
    """Frame over the first ``stop`` offsets (same table and calendar)."""
    sub = frame.series.slice(0, stop, name)
    return Frame(
        series=sub,
        cal=frame.cal,
        table=frame.table,
        ylog=frame.ylog[:stop],
        pod=frame.pod[:stop],
        pow_=frame.pow_[:stop],
        special=frame.special[:stop],
        lag=frame.lag[:stop],
    )


def extend_frame(frame: Frame, extra: int) -> Frame:
    """Frame padded ``extra`` periods past the data end.

    Padded log-load repeats the last observation; forecast recursions
    never read observations past their origin, so predictions are
    unaffected.  The lag table must cover the extended dates.
    """
    padded = LoadSeries(
        frame.start,
        np.concatenate([frame.series.values, np.full(extra, frame.series.values[-1])]),
        frame.series.name,
    )
    return build_frame(padded, frame.cal, frame.table)
