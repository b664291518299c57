"""Half-hourly time indexing, load series storage, and CSV ingestion.

A day always has exactly 48 half-hourly periods (1..48); civil clock
changes do not alter series length.  Feeds with 46/50-period clock-change
days must be normalised upstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    GapDetected,
    NonMonotonic,
    NonPositiveValue,
    ParseError,
)

PERIODS_PER_DAY = 48
PERIODS_PER_WEEK = 336

CSV_HEADER = ("date", "period", "load_mw")


@dataclass(frozen=True, order=True)
class PeriodStamp:
    """A calendar date plus a half-hour-of-day slot (1..48)."""

    date: date
    period: int

    def __post_init__(self) -> None:
        if not 1 <= self.period <= PERIODS_PER_DAY:
            raise ValueError(f"period must be in 1..48, got {self.period}")


def advance(stamp: PeriodStamp, k: int) -> PeriodStamp:
    """Return the stamp ``k`` half-hours later (earlier if ``k`` < 0)."""
    days, rem = divmod(stamp.period - 1 + k, PERIODS_PER_DAY)
    return PeriodStamp(stamp.date + timedelta(days=days), rem + 1)


def offset_between(earlier: PeriodStamp, later: PeriodStamp) -> int:
    """Signed number of half-hours from ``earlier`` to ``later``."""
    return (later.date - earlier.date).days * PERIODS_PER_DAY + (
        later.period - earlier.period
    )


def period_of_day(stamp: PeriodStamp) -> int:
    """Half-hour of day, 1..48."""
    return stamp.period


def period_of_week(stamp: PeriodStamp) -> int:
    """Half-hour of week, 1..336; Monday period 1 maps to 1."""
    return stamp.date.weekday() * PERIODS_PER_DAY + stamp.period


class LoadSeries:
    """Contiguous, strictly positive half-hourly load in MW.

    Immutable after construction; index ``i`` corresponds to ``start``
    advanced by ``i`` periods.
    """

    def __init__(self, start: PeriodStamp, values: Sequence[float], name: str = "load"):
        arr = np.asarray(values, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise NonPositiveValue("series contains non-finite values")
        if np.any(arr <= 0.0):
            i = int(np.argmax(arr <= 0.0))
            raise NonPositiveValue(
                f"load must be positive; value {arr[i]} at offset {i}"
            )
        arr.setflags(write=False)
        self.start = start
        self.values = arr
        self.name = name

    def __len__(self) -> int:
        return int(self.values.size)

    def stamp_at(self, offset: int) -> PeriodStamp:
        return advance(self.start, offset)

    def offset_of(self, stamp: PeriodStamp) -> int:
        return offset_between(self.start, stamp)

    @property
    def end(self) -> PeriodStamp:
        """Stamp of the last observation."""
        return self.stamp_at(len(self) - 1)

    def log_values(self) -> np.ndarray:
        """Natural-log view of the series (values are validated positive)."""
        out = np.log(self.values)
        out.setflags(write=False)
        return out

    def slice(self, start_offset: int, end_offset: int, name: str | None = None) -> "LoadSeries":
        """Sub-series over offsets [start_offset, end_offset)."""
        if not 0 <= start_offset < end_offset <= len(self):
            raise IndexError("slice bounds outside series")
        return LoadSeries(
            self.stamp_at(start_offset),
            self.values[start_offset:end_offset],
            name or self.name,
        )

    def dates(self) -> Iterator[date]:
        """Distinct dates covered by the series, in order."""
        d = self.start.date
        last = self.end.date
        while d <= last:
            yield d
            d += timedelta(days=1)


def log_view(series: LoadSeries) -> np.ndarray:
    return series.log_values()


def read_csv(path, name: str = "load") -> LoadSeries:
    """Read a ``date,period,load_mw`` CSV into a validated LoadSeries.

    Rows must be strictly increasing in (date, period) with no gaps.
    Lines starting with ``#`` are ignored (output files carry a config
    hash comment).  Errors name the offending 1-based line number.
    """
    rows: list[tuple[date, int, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lineno = 0
        reader = csv.reader(fh)
        header_seen = False
        for raw in reader:
            lineno += 1
            if not raw or raw[0].startswith("#"):
                continue
            if not header_seen:
                if [c.strip() for c in raw] != list(CSV_HEADER):
                    raise ParseError(
                        f"line {lineno}: expected header {','.join(CSV_HEADER)}"
                    )
                header_seen = True
                continue
            if len(raw) != 3:
                raise ParseError(f"line {lineno}: expected 3 fields, got {len(raw)}")
            try:
                d = date.fromisoformat(raw[0].strip())
                p = int(raw[1])
                v = float(raw[2])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
            if not 1 <= p <= PERIODS_PER_DAY:
                raise ParseError(f"line {lineno}: period {p} outside 1..48")
            if not math.isfinite(v) or v <= 0.0:
                raise NonPositiveValue(f"line {lineno}: load {raw[2]} is not positive")
            rows.append((d, p, v))

    if not rows:
        raise ParseError(f"{path}: no data rows")

    start = PeriodStamp(rows[0][0], rows[0][1])
    prev = None
    for i, (d, p, v) in enumerate(rows):
        stamp = PeriodStamp(d, p)
        if prev is not None:
            if stamp <= prev:
                raise NonMonotonic(
                    f"row {i + 1} ({d} p{p}) does not increase on previous row"
                )
            if offset_between(prev, stamp) != 1:
                raise GapDetected(f"missing period before row {i + 1} ({d} p{p})")
        prev = stamp

    return LoadSeries(start, np.array([v for _, _, v in rows]), name=name)


def write_csv(series: LoadSeries, path, header_comment: str | None = None) -> None:
    """Write a LoadSeries in the standard CSV format (LF line endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(",".join(CSV_HEADER) + "\n")
        stamp = series.start
        for v in series.values:
            fh.write(f"{stamp.date.isoformat()},{stamp.period},{float(v)!r}\n")
            stamp = advance(stamp, 1)
