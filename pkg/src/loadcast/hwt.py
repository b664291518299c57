"""Triple-seasonal HWT exponential smoothing and its rule-based extension.

The plain method smooths a level, an intraday index (48 slots), an
intraweek index (336 slots) and an intrayear index, with an AR(1)
adjustment on the one-step error.  The rule-based form adds a special-day
indicator: the intraday/intraweek indices freeze on special days, the
intrayear index smooths at a separate rate, and the error variance is
allowed to differ between the two day types.

The intrayear index is stored as one value per observed period (not a
fixed ring) because its lag is time-varying under the special-day rules.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import InsufficientHistory, MissingAnnualIndex
from .estimate import (
    FitResult,
    MinimizeOptions,
    Transform,
    gaussian_nll,
    minimize,
    two_class_nll,
)
from .framing import Frame
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK

#: Periods treated as the seed year; likelihoods start after it.
SEED_PERIODS = 365 * PERIODS_PER_DAY

LEVEL_WEEKS = 2
INTRADAY_WEEKS = 4
INTRAWEEK_WEEKS = 8


@dataclass(frozen=True)
class HwtParams:
    lam: float
    delta: float
    omega: float
    alpha1: float
    alpha2: float
    phi: float
    sigma_n2: float | None = None
    sigma_s2: float | None = None

    def validated(self) -> "HwtParams":
        for name in ("lam", "delta", "omega", "alpha1", "alpha2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not -1.0 < self.phi < 1.0:
            raise ValueError(f"phi={self.phi} outside (-1, 1)")
        return self


DEFAULT_START = HwtParams(lam=0.1, delta=0.05, omega=0.05, alpha1=0.05, alpha2=0.05, phi=0.3)

_TRANSFORMS_RB = [Transform.UNIT] * 5 + [Transform.SIGNED_UNIT]
_TRANSFORMS_PLAIN = [Transform.UNIT] * 4 + [Transform.SIGNED_UNIT]


@dataclass
class HwtState:
    """Mutable filter state; single-writer.

    ``intrayear`` holds one value per absolute series offset; entries
    below ``n_seed`` come from seeding, later ones from filtering.
    ``offset`` is the next offset to be filtered.
    """

    level: float
    intraday: np.ndarray
    intraweek: np.ndarray
    intrayear: np.ndarray
    last_error: float
    offset: int

    def clone(self) -> "HwtState":
        return HwtState(
            self.level,
            self.intraday.copy(),
            self.intraweek.copy(),
            self.intrayear.copy(),
            self.last_error,
            self.offset,
        )


def _normal_week_blocks(frame: Frame, limit: int, want: int) -> list[int]:
    """Start offsets of the first ``want`` special-free 336-period blocks
    within [0, limit)."""
    out = []
    for b in range(0, limit - PERIODS_PER_WEEK + 1, PERIODS_PER_WEEK):
        if not frame.special[b : b + PERIODS_PER_WEEK].any():
            out.append(b)
            if len(out) == want:
                break
    return out


def init_state(frame: Frame, n_seed: int = SEED_PERIODS) -> HwtState:
    """Seed level and seasonal indices from the head of the series.

    Level: mean log-load of the first two weeks.  Intraday index:
    per-period-of-day means over the first four special-free weeks.
    Intraweek: per-period-of-week means over the first eight special-free
    weeks, after level and intraday are removed.  Intrayear: residual
    y - (level + d + w) over the whole first year, both day types, so
    lags from year two always resolve.
    """
    y = frame.ylog
    if y.size < 2 * SEED_PERIODS:
        raise InsufficientHistory(
            f"need at least two years ({2 * SEED_PERIODS} periods) to seed, got {y.size}"
        )
    level = float(np.mean(y[: LEVEL_WEEKS * PERIODS_PER_WEEK]))

    blocks = _normal_week_blocks(frame, n_seed, INTRADAY_WEEKS)
    if not blocks:
        blocks = list(range(0, INTRADAY_WEEKS * PERIODS_PER_WEEK, PERIODS_PER_WEEK))
    d0 = np.zeros(PERIODS_PER_DAY)
    counts = np.zeros(PERIODS_PER_DAY)
    for b in blocks:
        for i in range(b, b + PERIODS_PER_WEEK):
            d0[frame.pod[i]] += y[i] - level
            counts[frame.pod[i]] += 1
    d0 /= np.maximum(counts, 1)

    blocks = _normal_week_blocks(frame, n_seed, INTRAWEEK_WEEKS)
    if not blocks:
        blocks = list(range(0, INTRAWEEK_WEEKS * PERIODS_PER_WEEK, PERIODS_PER_WEEK))
    w0 = np.zeros(PERIODS_PER_WEEK)
    wcounts = np.zeros(PERIODS_PER_WEEK)
    for b in blocks:
        for i in range(b, b + PERIODS_PER_WEEK):
            w0[frame.pow_[i]] += y[i] - level - d0[frame.pod[i]]
            wcounts[frame.pow_[i]] += 1
    w0 /= np.maximum(wcounts, 1)

    a0 = y[:n_seed] - (level + d0[frame.pod[:n_seed]] + w0[frame.pow_[:n_seed]])

    return HwtState(
        level=level,
        intraday=d0,
        intraweek=w0,
        intrayear=np.asarray(a0, dtype=np.float64),
        last_error=0.0,
        offset=n_seed,
    )


def filter_step(
    state: HwtState,
    params: HwtParams,
    y_t: float,
    pod: int,
    pow_: int,
    is_special: bool,
    lag_m3: int,
) -> tuple[HwtState, float, float]:
    """One recursion step; returns (state, e_t, one_step_pred).

    ``pod``/``pow_`` are 0-based indices of the period being filtered.
    The state is updated in place and returned.
    """
    idx = state.offset - lag_m3
    if lag_m3 <= 0 or idx < 0 or idx >= state.intrayear.size:
        raise MissingAnnualIndex(
            f"offset {state.offset} lag {lag_m3} points outside stored history"
        )
    a_ref = state.intrayear[idx]
    base = state.level + state.intraday[pod] + state.intraweek[pow_] + a_ref
    pred = base + params.phi * state.last_error
    e = y_t - base
    state.level += params.lam * e
    if not is_special:
        state.intraday[pod] += params.delta * e
        state.intraweek[pow_] += params.omega * e
        a_new = a_ref + params.alpha1 * e
    else:
        a_new = a_ref + params.alpha2 * e
    state.intrayear = np.append(state.intrayear, a_new)
    state.last_error = e
    state.offset += 1
    return state, e, pred


def forecast(
    state: HwtState,
    params: HwtParams,
    frame: Frame,
    horizon: int,
) -> np.ndarray:
    """Log-load forecasts for the ``horizon`` periods after the filtered
    history, from the current state (future errors zero)."""
    if horizon < 1 or horizon > PERIODS_PER_DAY:
        raise ValueError("horizon must be in 1..48")
    out = np.empty(horizon)
    phih = 1.0
    for h in range(1, horizon + 1):
        tt = state.offset - 1 + h
        if tt >= frame.n:
            raise IndexError("forecast target outside frame")
        lag = frame.lag[tt]
        idx = tt - lag
        if lag <= 0 or idx < 0 or idx >= state.intrayear.size:
            raise MissingAnnualIndex(f"target offset {tt} lag {lag} unresolvable")
        phih *= params.phi
        out[h - 1] = (
            state.level
            + state.intraday[frame.pod[tt]]
            + state.intraweek[frame.pow_[tt]]
            + state.intrayear[idx]
            + phih * state.last_error
        )
    return out


def _check_lags(frame: Frame, n_seed: int) -> None:
    lag = frame.lag[n_seed:]
    idx = np.arange(n_seed, frame.n)
    bad = (lag <= 0) | (idx - lag < 0)
    if bad.any():
        off = int(idx[bad][0])
        raise MissingAnnualIndex(
            f"intrayear lag unresolvable at offset {off} ({frame.stamp_at(off)})"
        )


def filter_series(
    frame: Frame, params: HwtParams, seeds: HwtState, n_seed: int = SEED_PERIODS
) -> tuple[np.ndarray, HwtState]:
    """Run the compiled filtering pass; returns (eps, end_state)."""
    _check_lags(frame, n_seed)
    eps, level, d, w, a, e_last = _kernels.hwt_filter(
        frame.ylog,
        frame.pod,
        frame.pow_,
        frame.lag,
        frame.special,
        seeds.level,
        seeds.intraday,
        seeds.intraweek,
        seeds.intrayear[:n_seed],
        params.lam,
        params.delta,
        params.omega,
        params.alpha1,
        params.alpha2,
        params.phi,
        n_seed,
    )
    state = HwtState(
        level=float(level),
        intraday=d,
        intraweek=w,
        intrayear=a,
        last_error=float(e_last),
        offset=frame.n,
    )
    return eps, state


@dataclass
class FittedHwt:
    """Frozen parameters plus seeding, ready for rolling forecasts."""

    params: HwtParams
    rule_based: bool
    tag: str
    fit: FitResult | None = None
    n_seed: int = SEED_PERIODS

    def rolling_log_forecasts(self, frame: Frame, first_origin: int, horizon: int) -> np.ndarray:
        """(n_origins, horizon) log-scale forecasts; origin j is offset
        first_origin + j and uses observations up to that offset."""
        _check_lags(frame, self.n_seed)
        seeds = init_state(frame, self.n_seed)
        p = self.params
        return _kernels.hwt_rolling(
            frame.ylog,
            frame.pod,
            frame.pow_,
            frame.lag,
            frame.special,
            seeds.level,
            seeds.intraday,
            seeds.intraweek,
            seeds.intrayear,
            p.lam,
            p.delta,
            p.omega,
            p.alpha1,
            p.alpha2,
            p.phi,
            self.n_seed,
            first_origin,
            horizon,
        )


def fit(
    frame: Frame,
    rule_based: bool = True,
    start: HwtParams = DEFAULT_START,
    options: MinimizeOptions | None = None,
    tag: str | None = None,
) -> FittedHwt:
    """Maximum-likelihood fit on an estimation frame.

    Rule-based fits maximise the two-variance likelihood; plain fits tie
    alpha2 to alpha1 and use a single variance (special days treated as
    normal, so the frame should carry an all-normal calendar and table).
    """
    opts = options or MinimizeOptions(max_evals=2000, restarts=2)
    seeds = init_state(frame)
    special = frame.special.astype(bool)[SEED_PERIODS:]

    if rule_based:
        def objective(x):
            p = HwtParams(*x)
            eps, _ = filter_series(frame, p, seeds)
            nll, _, _ = two_class_nll(eps, special)
            return nll

        x0 = np.array(
            [start.lam, start.delta, start.omega, start.alpha1, start.alpha2, start.phi]
        )
        res = minimize(objective, x0, _TRANSFORMS_RB, opts)
        p = HwtParams(*res.params)
        eps, _ = filter_series(frame, p, seeds)
        nll, s2n, s2s = two_class_nll(eps, special)
    else:
        def objective(x):
            lam, delta, omega, alpha1, phi = x
            p = HwtParams(lam, delta, omega, alpha1, alpha1, phi)
            eps, _ = filter_series(frame, p, seeds)
            nll, _ = gaussian_nll(eps)
            return nll

        x0 = np.array([start.lam, start.delta, start.omega, start.alpha1, start.phi])
        res = minimize(objective, x0, _TRANSFORMS_PLAIN, opts)
        lam, delta, omega, alpha1, phi = res.params
        p = HwtParams(lam, delta, omega, alpha1, alpha1, phi)
        eps, _ = filter_series(frame, p, seeds)
        nll, s2n = gaussian_nll(eps)
        s2s = s2n

    res.sigma_n2, res.sigma_s2 = s2n, s2s
    params = replace(p, sigma_n2=s2n, sigma_s2=s2s).validated()
    return FittedHwt(
        params=params,
        rule_based=rule_based,
        tag=tag or ("rb-hwt" if rule_based else "hwt"),
        fit=res,
    )
