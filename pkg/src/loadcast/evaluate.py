"""Rolling-origin backtesting, MAPE/RMSPE, naive benchmarks, forecast
combination and report assembly.

Forecast accuracy is always measured on the megawatt scale.  A target
counts as special when the target stamp's date is special, regardless of
the origin's date.  Origins run from the last estimation offset to the
last offset with a full horizon window, so every origin contributes all
horizons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .errors import EmptyMask, InsufficientHistory, MismatchedHorizons
from .framing import Frame
from .gbcal import BANK_HOLIDAY_MONDAY_KINDS, EASTER_KINDS, holiday_date
from .rules import rule1_match
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK, PeriodStamp

PERIOD_BREAKDOWN_HORIZONS = (12, 48)


@dataclass
class ForecastSet:
    """Forecasts 1..H from one origin, megawatt scale."""

    origin: PeriodStamp
    predictions_mw: np.ndarray
    tag: str


@dataclass
class BacktestResult:
    tag: str
    first_origin: int  # offset of origin j=0
    horizon: int
    preds_mw: np.ndarray  # (n_origins, H); NaN marks failed/untrained
    failures: list[str] = field(default_factory=list)

    @property
    def n_origins(self) -> int:
        return int(self.preds_mw.shape[0])

    def forecast_sets(self, frame: Frame):
        for j in range(self.n_origins):
            yield ForecastSet(
                origin=frame.stamp_at(self.first_origin + j),
                predictions_mw=self.preds_mw[j],
                tag=self.tag,
            )


def rolling_backtest(model, frame: Frame, post_sample_start: int, horizon: int) -> BacktestResult:
    """Backtest a fitted model through the post-sample portion of a frame.

    The model must have been fitted on the estimation sample only; its
    parameters stay frozen.  Origin offsets run from post_sample_start-1
    to n-1-horizon.
    """
    if not 1 <= horizon <= PERIODS_PER_DAY:
        raise ValueError("horizon must be in 1..48")
    first_origin = post_sample_start - 1
    if first_origin < 0 or first_origin + horizon >= frame.n:
        raise InsufficientHistory("post-sample window does not fit in the frame")
    log_preds = model.rolling_log_forecasts(frame, first_origin, horizon)
    preds_mw = np.exp(log_preds)
    failures = []
    bad = np.all(~np.isfinite(log_preds), axis=1)
    for j in np.nonzero(bad)[0]:
        failures.append(f"origin {frame.stamp_at(first_origin + int(j))}: no forecasts")
    return BacktestResult(
        tag=model.tag,
        first_origin=first_origin,
        horizon=horizon,
        preds_mw=preds_mw,
        failures=failures,
    )


def actuals_matrix(frame: Frame, first_origin: int, n_origins: int, horizon: int) -> np.ndarray:
    """actuals[j, h-1] = observed MW at origin j's horizon-h target."""
    origins = np.arange(first_origin, first_origin + n_origins)
    return frame.series.values[origins[:, None] + np.arange(1, horizon + 1)[None, :]]


def special_target_matrix(frame: Frame, first_origin: int, n_origins: int, horizon: int) -> np.ndarray:
    origins = np.arange(first_origin, first_origin + n_origins)
    return frame.special[origins[:, None] + np.arange(1, horizon + 1)[None, :]].astype(bool)


def mape(actuals_mw: np.ndarray, forecasts_mw: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean absolute percentage error on the MW scale."""
    a = np.asarray(actuals_mw, dtype=np.float64)
    f = np.asarray(forecasts_mw, dtype=np.float64)
    if mask is not None:
        a, f = a[mask], f[mask]
    if a.size == 0:
        raise EmptyMask("no targets selected for MAPE")
    return float(np.mean(np.abs((a - f) / a)))


def rmspe(actuals_mw: np.ndarray, forecasts_mw: np.ndarray, mask: np.ndarray | None = None) -> float:
    a = np.asarray(actuals_mw, dtype=np.float64)
    f = np.asarray(forecasts_mw, dtype=np.float64)
    if mask is not None:
        a, f = a[mask], f[mask]
    if a.size == 0:
        raise EmptyMask("no targets selected for RMSPE")
    return float(np.sqrt(np.mean(((a - f) / a) ** 2)))


def combine(a: BacktestResult, b: BacktestResult) -> BacktestResult:
    """Simple average of two forecast sets, megawatt space."""
    if (
        a.first_origin != b.first_origin
        or a.horizon != b.horizon
        or a.preds_mw.shape != b.preds_mw.shape
    ):
        raise MismatchedHorizons("combined forecasts must share origins and horizons")
    return BacktestResult(
        tag=f"combo({a.tag},{b.tag})",
        first_origin=a.first_origin,
        horizon=a.horizon,
        preds_mw=0.5 * (a.preds_mw + b.preds_mw),
        failures=sorted(set(a.failures) | set(b.failures)),
    )


class _BenchmarkBase:
    """Benchmarks forecast a value per target period, independent of the
    origin, so the rolling matrix is a gather over a per-period array."""

    tag = "benchmark"

    def __init__(self, frame: Frame):
        self.frame = frame

    def _value_for_target(self, tt: int) -> float:
        raise NotImplementedError

    def rolling_log_forecasts(self, frame: Frame, first_origin: int, horizon: int) -> np.ndarray:
        self.frame = frame
        n_origins = (frame.n - 1 - horizon) - first_origin + 1
        vals = np.full(frame.n, np.nan)
        for tt in range(first_origin + 1, frame.n):
            vals[tt] = self._value_for_target(tt)
        idx = np.arange(first_origin, first_origin + n_origins)[:, None] + np.arange(
            1, horizon + 1
        )[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.log(vals[idx])


class SeasonalRandomWalk(_BenchmarkBase):
    """Same special day last year for special targets, else one week back."""

    tag = "srw"

    def _value_for_target(self, tt: int) -> float:
        frame = self.frame
        stamp = frame.stamp_at(tt)
        cls = frame.cal.classify(stamp.date)
        if cls.is_special:
            ref = rule1_match(stamp.date, cls)
            back = (stamp.date - ref).days * PERIODS_PER_DAY
        else:
            back = PERIODS_PER_WEEK
        idx = tt - back
        if idx < 0:
            return np.nan
        return float(frame.series.values[idx])


class SeasonalMovingAverage(_BenchmarkBase):
    """Mean of up to four prior same-special-day values (same period);
    mean of four prior same-weekday values for normal targets."""

    tag = "sma4"

    def _value_for_target(self, tt: int) -> float:
        frame = self.frame
        stamp = frame.stamp_at(tt)
        cls = frame.cal.classify(stamp.date)
        vals = []
        if cls.is_special:
            for k in range(1, 5):
                if cls.kind in BANK_HOLIDAY_MONDAY_KINDS or cls.kind in EASTER_KINDS:
                    ref = holiday_date(cls.kind, stamp.date.year - k)
                else:
                    ref = stamp.date.replace(year=stamp.date.year - k)
                idx = tt - (stamp.date - ref).days * PERIODS_PER_DAY
                if idx >= 0:
                    vals.append(float(frame.series.values[idx]))
        else:
            for k in range(1, 5):
                idx = tt - k * PERIODS_PER_WEEK
                if idx >= 0:
                    vals.append(float(frame.series.values[idx]))
        if not vals:
            return np.nan
        return float(np.mean(vals))


class RecentSunday(_BenchmarkBase):
    """Load at the same period of the most recent Sunday before the
    target's day."""

    tag = "recent-sunday"

    def _value_for_target(self, tt: int) -> float:
        frame = self.frame
        stamp = frame.stamp_at(tt)
        days_back = stamp.date.weekday() + 1
        idx = tt - days_back * PERIODS_PER_DAY
        if idx < 0:
            return np.nan
        return float(frame.series.values[idx])


BENCHMARKS = {
    "srw": SeasonalRandomWalk,
    "sma4": SeasonalMovingAverage,
    "recent-sunday": RecentSunday,
}


@dataclass
class EvalReport:
    """Per-horizon error rows plus per-period-of-day breakdowns."""

    rows: list[dict]  # model, subset, horizon, mape, rmspe, n
    period_rows: list[dict]  # model, horizon, period, mape
    n_origins: int
    horizon: int

    def subset_mape(self, tag: str, subset: str) -> dict[int, float]:
        return {
            r["horizon"]: r["mape"]
            for r in self.rows
            if r["model"] == tag and r["subset"] == subset
        }

    def mean_mape(self, tag: str, subset: str) -> float:
        vals = [v for v in self.subset_mape(tag, subset).values() if np.isfinite(v)]
        if not vals:
            raise EmptyMask(f"no finite MAPE for {tag}/{subset}")
        return float(np.mean(vals))

    def to_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("model,subset,horizon,mape,rmspe,n\n")
            for r in self.rows:
                fh.write(
                    f"{r['model']},{r['subset']},{r['horizon']},"
                    f"{_fmt(r['mape'])},{_fmt(r['rmspe'])},{r['n']}\n"
                )

    def period_to_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("model,horizon,period,mape\n")
            for r in self.period_rows:
                fh.write(f"{r['model']},{r['horizon']},{r['period']},{_fmt(r['mape'])}\n")

    def to_json(self, path, header: dict | None = None) -> None:
        doc = {
            "meta": header or {},
            "n_origins": self.n_origins,
            "horizon": self.horizon,
            "rows": self.rows,
            "period_rows": self.period_rows,
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=True)
            fh.write("\n")


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        return "nan"
    return f"{x:.12g}"


def report(
    results: list[BacktestResult],
    frame: Frame,
    period_horizons: tuple[int, ...] = PERIOD_BREAKDOWN_HORIZONS,
) -> EvalReport:
    """Per-horizon MAPE/RMSPE for {all, special, normal} target subsets.

    Horizons with no finite forecasts for a model (untrained ANN
    horizons) are omitted from that model's rows.  Empty subsets yield
    NaN entries with n=0 rather than failing.
    """
    if not results:
        raise ValueError("no backtest results to report")
    first = results[0]
    for r in results[1:]:
        if r.first_origin != first.first_origin or r.horizon != first.horizon:
            raise MismatchedHorizons("all results must share origins and horizon")
    n_origins, horizon = first.n_origins, first.horizon
    actual = actuals_matrix(frame, first.first_origin, n_origins, horizon)
    special = special_target_matrix(frame, first.first_origin, n_origins, horizon)
    subsets = {"all": np.ones_like(special), "special": special, "normal": ~special}

    rows = []
    period_rows = []
    pod_targets = {
        h: frame.pod[first.first_origin + np.arange(n_origins) + h] for h in period_horizons
    }
    for res in results:
        for h in range(1, horizon + 1):
            p = res.preds_mw[:, h - 1]
            a = actual[:, h - 1]
            finite = np.isfinite(p)
            if not finite.any():
                continue
            for subset_name, subset_mask in subsets.items():
                m = finite & subset_mask[:, h - 1]
                n = int(m.sum())
                if n == 0:
                    rows.append(
                        {
                            "model": res.tag,
                            "subset": subset_name,
                            "horizon": h,
                            "mape": float("nan"),
                            "rmspe": float("nan"),
                            "n": 0,
                        }
                    )
                    continue
                rows.append(
                    {
                        "model": res.tag,
                        "subset": subset_name,
                        "horizon": h,
                        "mape": mape(a, p, m),
                        "rmspe": rmspe(a, p, m),
                        "n": n,
                    }
                )
        for h in period_horizons:
            if h > horizon:
                continue
            p = res.preds_mw[:, h - 1]
            a = actual[:, h - 1]
            finite = np.isfinite(p)
            if not finite.any():
                continue
            pods = pod_targets[h]
            for period in range(PERIODS_PER_DAY):
                m = finite & (pods == period)
                if not m.any():
                    continue
                period_rows.append(
                    {
                        "model": res.tag,
                        "horizon": h,
                        "period": period + 1,
                        "mape": mape(a, p, m),
                    }
                )
    return EvalReport(rows=rows, period_rows=period_rows, n_origins=n_origins, horizon=horizon)
