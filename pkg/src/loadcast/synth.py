"""Seeded synthetic GB-like half-hourly load with planted special-day
structure.

Log-load is the sum of a base level, a per-cycle-class intraday shape, a
weekend depression, an annual sinusoid (winter peak), a slow drift,
special-day log-suppressions, and AR(1) noise.  Suppression depth varies
with the day-of-week class of the special day and bridging proximity
days dip further than non-bridging ones, so the weekday-aware rules have
a real signal to exploit and the Christmas period is heterogeneous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import ConfigInvalid
from .gbcal import Calendar, CycleClass, DayClassification, SpecialDayKind
from .series import PERIODS_PER_DAY, LoadSeries, PeriodStamp

#: Multiplicative suppression (MW scale) per special-day kind, before the
#: cycle-class modifier.  Christmas Day is deepest; proximity days are
#: shallow, the Christmas period deliberately heterogeneous.
DEFAULT_SUPPRESSION = {
    SpecialDayKind.NEW_YEARS_DAY: 0.80,
    SpecialDayKind.DAY_AFTER_NEW_YEAR: 0.88,
    SpecialDayKind.GOOD_FRIDAY: 0.85,
    SpecialDayKind.EASTER_MONDAY: 0.84,
    SpecialDayKind.EARLY_MAY_BANK_HOLIDAY: 0.86,
    SpecialDayKind.SPRING_BANK_HOLIDAY: 0.85,
    SpecialDayKind.SUMMER_BANK_HOLIDAY: 0.86,
    SpecialDayKind.CHRISTMAS_DAY: 0.75,
    SpecialDayKind.BOXING_DAY: 0.80,
    SpecialDayKind.PROXIMITY_DAY: 0.94,
    SpecialDayKind.OTHER_CHRISTMAS_PERIOD: 0.86,
}

#: Scale applied to the log-suppression depending on the special day's
#: cycle class: weekend specials dip less (load is already low), Mondays
#: dip slightly more.  This is the signal Rules 3 and 4 exploit.
DEFAULT_CLASS_EFFECT = {
    CycleClass.MON: 1.15,
    CycleClass.TWT: 1.00,
    CycleClass.FRI: 0.90,
    CycleClass.SAT: 0.55,
    CycleClass.SUN: 0.40,
}

#: Intraday shape scale per cycle class (distinct average profiles).
DEFAULT_INTRADAY_SCALE = {
    CycleClass.MON: 1.05,
    CycleClass.TWT: 1.00,
    CycleClass.FRI: 0.95,
    CycleClass.SAT: 0.72,
    CycleClass.SUN: 0.62,
}


@dataclass
class SynthConfig:
    start: date = date(2001, 1, 1)
    years: int = 9
    base_mw: float = 35000.0
    intraday_amp: float = 0.25  # log amplitude of the daily swing
    intraday_scale: dict = field(default_factory=lambda: dict(DEFAULT_INTRADAY_SCALE))
    weekend_effect: dict = field(
        default_factory=lambda: {CycleClass.SAT: -0.06, CycleClass.SUN: -0.09}
    )
    annual_amp: float = 0.20
    annual_peak_doy: float = 12.0  # winter peak near 12 January
    suppression: dict = field(default_factory=lambda: dict(DEFAULT_SUPPRESSION))
    class_effect: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_EFFECT))
    bridging_extra: float = 0.92  # extra multiplicative dip for B-PDs
    noise_ar: float = 0.9
    noise_sd: float = 0.01
    drift_per_year: float = 0.01
    seed: int = 20010101

    def validate(self) -> "SynthConfig":
        if self.years < 3:
            raise ConfigInvalid("need at least 3 years (rules require history)")
        if not -1.0 < self.noise_ar < 1.0:
            raise ConfigInvalid("noise AR coefficient must lie in (-1, 1)")
        if self.noise_sd < 0:
            raise ConfigInvalid("noise sd must be non-negative")
        for kind, s in self.suppression.items():
            if not 0.0 < s <= 1.0:
                raise ConfigInvalid(f"suppression for {kind} must be in (0, 1]")
        if not 0.0 < self.bridging_extra <= 1.0:
            raise ConfigInvalid("bridging_extra must be in (0, 1]")
        return self


def _intraday_shape(amp: float) -> np.ndarray:
    """Morning/evening double-peak daily profile in log space, mean zero."""
    p = np.arange(PERIODS_PER_DAY)
    hours = (p + 0.5) / 2.0
    shape = 0.75 * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0) + 0.35 * np.sin(
        4.0 * np.pi * (hours - 5.5) / 24.0
    )
    shape = shape - shape.mean()
    return amp * shape


def day_effect(cls: DayClassification, cfg: SynthConfig) -> float:
    """Log-scale special-day effect for one date (0 when normal)."""
    if not cls.is_special:
        return 0.0
    mult = cfg.suppression[cls.kind]
    if cls.kind is SpecialDayKind.PROXIMITY_DAY and cls.is_bridging:
        mult *= cfg.bridging_extra
    return math.log(mult) * cfg.class_effect[cls.cycle_class]


def generate(
    cfg: SynthConfig, cal: Calendar | None = None
) -> tuple[LoadSeries, dict[date, SpecialDayKind]]:
    """Generate the series and its ground-truth special-day labels."""
    cfg.validate()
    cal = cal or Calendar()
    end = date(cfg.start.year + cfg.years, cfg.start.month, cfg.start.day)
    n_days = (end - cfg.start).days
    n = n_days * PERIODS_PER_DAY

    shape = _intraday_shape(cfg.intraday_amp)
    log_base = math.log(cfg.base_mw)

    ylog = np.empty(n)
    labels: dict[date, SpecialDayKind] = {}
    d = cfg.start
    for i in range(n_days):
        cls = cal.classify(d)
        if cls.is_special:
            labels[d] = cls.kind
        days_since = (d - cfg.start).days
        annual = cfg.annual_amp * math.cos(
            2.0 * math.pi * (d.timetuple().tm_yday - cfg.annual_peak_doy) / 365.25
        )
        level = (
            log_base
            + annual
            + cfg.weekend_effect.get(cls.cycle_class, 0.0)
            + cfg.drift_per_year * days_since / 365.25
            + day_effect(cls, cfg)
        )
        sl = slice(i * PERIODS_PER_DAY, (i + 1) * PERIODS_PER_DAY)
        ylog[sl] = level + cfg.intraday_scale[cls.cycle_class] * shape
        d += timedelta(days=1)

    if cfg.noise_sd > 0:
        rng = np.random.default_rng(cfg.seed)
        innov = rng.normal(0.0, cfg.noise_sd, size=n)
        noise = np.empty(n)
        acc = 0.0
        rho = cfg.noise_ar
        for i in range(n):
            acc = rho * acc + innov[i]
            noise[i] = acc
        ylog += noise

    series = LoadSeries(
        PeriodStamp(cfg.start, 1), np.exp(ylog), name=f"synth-{cfg.seed}"
    )
    return series, labels


def write_labels(labels: dict[date, SpecialDayKind], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,kind\n")
        for d in sorted(labels):
            fh.write(f"{d.isoformat()},{labels[d].value}\n")
