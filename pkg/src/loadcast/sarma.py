"""Triple-seasonal ARMA and its rule-based extension.

The model multiplies short-lag, intraday (48), and intraweek (336)
polynomial factors with a three-term annual factor whose lags come from
the rule table and nest through past occurrences.  On special days the
annual AR and MA factors switch to separate coefficient sets.  All
polynomial factors are written as (1 + sum coef * L^lag), matching the
printed annual factor; the sign convention only flips estimated
coefficients.

Estimation is by conditional maximum likelihood: pre-sample terms are
zero, annual terms whose nested lag leaves history are dropped (and
counted), and the first year is excluded from the objective.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import InsufficientHistory
from .estimate import (
    FitResult,
    MinimizeOptions,
    Transform,
    gaussian_nll,
    minimize,
    two_class_nll,
)
from .framing import Frame
from .hwt import SEED_PERIODS
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK, PeriodStamp

MAX_ORDER = 3


@dataclass(frozen=True)
class SarmaOrders:
    p: int = 2
    P1: int = 1
    P2: int = 1
    q: int = 2
    Q1: int = 1
    Q2: int = 1

    def __post_init__(self) -> None:
        for name in ("p", "P1", "P2", "q", "Q1", "Q2"):
            v = getattr(self, name)
            if not 0 <= v <= MAX_ORDER:
                raise ValueError(f"order {name}={v} outside 0..{MAX_ORDER}")

    @property
    def n_ar(self) -> int:
        return self.p + self.P1 + self.P2

    @property
    def n_ma(self) -> int:
        return self.q + self.Q1 + self.Q2


DEFAULT_ORDERS = SarmaOrders()


@dataclass
class SarmaParams:
    c: float
    ar_short: np.ndarray  # (p,)
    ar_intraday: np.ndarray  # (P1,)
    ar_intraweek: np.ndarray  # (P2,)
    ma_short: np.ndarray  # (q,)
    ma_intraday: np.ndarray  # (Q1,)
    ma_intraweek: np.ndarray  # (Q2,)
    annual_ar_normal: np.ndarray  # (3,)
    annual_ma_normal: np.ndarray  # (3,)
    annual_ar_special: np.ndarray  # (3,)
    annual_ma_special: np.ndarray  # (3,)
    sigma_n2: float | None = None
    sigma_s2: float | None = None


def expand_product(factors: list[tuple[int, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Multiply factors (1 + sum coef_i L^(i*period)) into a sparse lag set.

    Each factor is (period, coefs).  Returns (lags, coefs) for every term
    with lag > 0; the implicit leading 1 is excluded.
    """
    terms = {0: 1.0}
    for period, coefs in factors:
        new: dict[int, float] = {}
        for lag, c in terms.items():
            new[lag] = new.get(lag, 0.0) + c
            for i, ci in enumerate(np.asarray(coefs, dtype=np.float64), start=1):
                l2 = lag + i * period
                new[l2] = new.get(l2, 0.0) + c * float(ci)
        terms = new
    lags = sorted(l for l in terms if l > 0)
    return (
        np.array(lags, dtype=np.int64),
        np.array([terms[l] for l in lags], dtype=np.float64),
    )


def static_ar_expansion(params: SarmaParams) -> tuple[np.ndarray, np.ndarray]:
    return expand_product(
        [
            (1, params.ar_short),
            (PERIODS_PER_DAY, params.ar_intraday),
            (PERIODS_PER_WEEK, params.ar_intraweek),
        ]
    )


def static_ma_expansion(params: SarmaParams) -> tuple[np.ndarray, np.ndarray]:
    return expand_product(
        [
            (1, params.ma_short),
            (PERIODS_PER_DAY, params.ma_intraday),
            (PERIODS_PER_WEEK, params.ma_intraweek),
        ]
    )


def annual_lags(frame: Frame, offset: int) -> tuple[int | None, int | None, int | None]:
    """The three nested annual lags at a series offset.

    L_A = m3(t); L_B = L_A + m3(t - L_A); L_C = L_B + m3(t - L_B).
    Components that leave the covered history are None.
    """
    la = lb = lc = None
    l1 = frame.lag[offset]
    if l1 > 0:
        la = int(l1)
        u = offset - la
        if u >= 0 and frame.lag[u] > 0:
            lb = la + int(frame.lag[u])
            v = offset - lb
            if v >= 0 and frame.lag[v] > 0:
                lc = lb + int(frame.lag[v])
    return la, lb, lc


def annual_lag_arrays(frame: Frame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised L_A/L_B/L_C per offset, -1 where unresolvable."""
    lag = frame.lag
    n = lag.size
    idx = np.arange(n, dtype=np.int64)

    la = np.where(lag > 0, lag, -1)

    u = idx - la
    ok = (la > 0) & (u >= 0)
    lag_u = np.where(ok, lag[np.clip(u, 0, n - 1)], -1)
    lb = np.where(ok & (lag_u > 0), la + lag_u, -1)

    v = idx - lb
    ok2 = (lb > 0) & (v >= 0)
    lag_v = np.where(ok2, lag[np.clip(v, 0, n - 1)], -1)
    lc = np.where(ok2 & (lag_v > 0), lb + lag_v, -1)

    return la.astype(np.int64), lb.astype(np.int64), lc.astype(np.int64)


def _soft_check_invertibility(params: SarmaParams) -> None:
    """Warn when any polynomial factor has a root inside the unit circle."""
    factors = {
        "ar_short": params.ar_short,
        "ar_intraday": params.ar_intraday,
        "ar_intraweek": params.ar_intraweek,
        "ma_short": params.ma_short,
        "ma_intraday": params.ma_intraday,
        "ma_intraweek": params.ma_intraweek,
        "annual_ar_normal": params.annual_ar_normal,
        "annual_ma_normal": params.annual_ma_normal,
        "annual_ar_special": params.annual_ar_special,
        "annual_ma_special": params.annual_ma_special,
    }
    for name, coefs in factors.items():
        coefs = np.trim_zeros(np.asarray(coefs, dtype=np.float64), "b")
        if coefs.size == 0:
            continue
        roots = np.roots(np.concatenate([coefs[::-1], [1.0]]))
        if roots.size and np.any(np.abs(roots) <= 1.0 + 1e-9):
            warnings.warn(
                f"factor {name} has a root on or inside the unit circle",
                UserWarning,
                stacklevel=3,
            )
            return


def residuals(
    frame: Frame,
    params: SarmaParams,
    resume_from: int = 0,
    e: np.ndarray | None = None,
    eexp: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Conditional residuals over the whole frame.

    With ``resume_from`` > 0, ``e``/``eexp`` must carry valid values for
    the earlier offsets and the recursion continues from there.  Returns
    (e, eexp, dropped_annual_terms).
    """
    n = frame.n
    if e is None:
        e = np.zeros(n)
        eexp = np.zeros(n)
    la, lb, lc = annual_lag_arrays(frame)
    ar_lags, ar_coefs = static_ar_expansion(params)
    ma_lags, ma_coefs = static_ma_expansion(params)
    dropped = _kernels.sarma_residuals(
        frame.ylog - params.c,
        frame.special,
        la,
        lb,
        lc,
        ar_lags,
        ar_coefs,
        ma_lags,
        ma_coefs,
        params.annual_ar_normal,
        params.annual_ar_special,
        params.annual_ma_normal,
        params.annual_ma_special,
        e,
        eexp,
        resume_from,
    )
    return e, eexp, int(dropped)


def class_sse(frame: Frame, e: np.ndarray, skip_first: int = SEED_PERIODS) -> tuple[float, float]:
    """(normal, special) sums of squared residuals after year-one exclusion."""
    tail = e[skip_first:]
    mask = frame.special.astype(bool)[skip_first:]
    return float(np.sum(tail[~mask] ** 2)), float(np.sum(tail[mask] ** 2))


def _pack(params: SarmaParams, rule_based: bool) -> np.ndarray:
    parts = [
        [params.c],
        params.ar_short,
        params.ar_intraday,
        params.ar_intraweek,
        params.ma_short,
        params.ma_intraday,
        params.ma_intraweek,
        params.annual_ar_normal,
        params.annual_ma_normal,
    ]
    if rule_based:
        parts += [params.annual_ar_special, params.annual_ma_special]
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def _unpack(x: np.ndarray, orders: SarmaOrders, rule_based: bool) -> SarmaParams:
    pos = 0

    def take(k):
        nonlocal pos
        out = np.asarray(x[pos : pos + k], dtype=np.float64)
        pos += k
        return out

    c = float(take(1)[0])
    ar_s = take(orders.p)
    ar_d = take(orders.P1)
    ar_w = take(orders.P2)
    ma_s = take(orders.q)
    ma_d = take(orders.Q1)
    ma_w = take(orders.Q2)
    ann_ar_n = take(3)
    ann_ma_n = take(3)
    if rule_based:
        ann_ar_s = take(3)
        ann_ma_s = take(3)
    else:
        ann_ar_s = ann_ar_n.copy()
        ann_ma_s = ann_ma_n.copy()
    return SarmaParams(
        c=c,
        ar_short=ar_s,
        ar_intraday=ar_d,
        ar_intraweek=ar_w,
        ma_short=ma_s,
        ma_intraday=ma_d,
        ma_intraweek=ma_w,
        annual_ar_normal=ann_ar_n,
        annual_ma_normal=ann_ma_n,
        annual_ar_special=ann_ar_s,
        annual_ma_special=ann_ma_s,
    )


def _alternating(order: int) -> np.ndarray:
    return np.array([0.1 * (-1.0) ** i for i in range(order)])


def start_params(frame: Frame, orders: SarmaOrders) -> SarmaParams:
    ann = np.array([-0.5, -0.5, -0.5])
    return SarmaParams(
        c=float(np.mean(frame.ylog)),
        ar_short=_alternating(orders.p),
        ar_intraday=_alternating(orders.P1),
        ar_intraweek=_alternating(orders.P2),
        ma_short=_alternating(orders.q),
        ma_intraday=_alternating(orders.Q1),
        ma_intraweek=_alternating(orders.Q2),
        annual_ar_normal=ann.copy(),
        annual_ma_normal=ann.copy(),
        annual_ar_special=ann.copy(),
        annual_ma_special=ann.copy(),
    )


@dataclass
class FittedSarma:
    params: SarmaParams
    orders: SarmaOrders
    rule_based: bool
    tag: str
    fit: FitResult | None = None
    dropped_terms: int = 0
    n_skip: int = SEED_PERIODS

    def rolling_log_forecasts(self, frame: Frame, first_origin: int, horizon: int) -> np.ndarray:
        e, eexp, _ = residuals(frame, self.params)
        la, lb, lc = annual_lag_arrays(frame)
        ar_lags, ar_coefs = static_ar_expansion(self.params)
        ma_lags, ma_coefs = static_ma_expansion(self.params)
        preds = _kernels.sarma_rolling(
            frame.ylog - self.params.c,
            frame.special,
            la,
            lb,
            lc,
            ar_lags,
            ar_coefs,
            ma_lags,
            ma_coefs,
            self.params.annual_ar_normal,
            self.params.annual_ar_special,
            self.params.annual_ma_normal,
            self.params.annual_ma_special,
            e,
            eexp,
            first_origin,
            horizon,
        )
        return preds + self.params.c


def forecast(fitted: FittedSarma, frame: Frame, origin: int, horizon: int) -> np.ndarray:
    """Log-load forecasts 1..horizon from a single origin offset.

    The frame must cover the targets; observations after ``origin`` are
    not used (the recursion is causal and future residuals are zeroed).
    """
    from .framing import slice_frame

    if origin + horizon >= frame.n:
        raise InsufficientHistory("forecast targets outside frame; extend the frame calendar")
    sub = slice_frame(frame, origin + horizon + 1)
    preds = fitted.rolling_log_forecasts(sub, origin, horizon)
    return preds[0]


def fit(
    frame: Frame,
    orders: SarmaOrders = DEFAULT_ORDERS,
    rule_based: bool = True,
    options: MinimizeOptions | None = None,
    tag: str | None = None,
    start: SarmaParams | None = None,
) -> FittedSarma:
    """Conditional-likelihood fit; the first year is excluded from the
    objective, and variances are concentrated out per day class."""
    if frame.n < SEED_PERIODS + PERIODS_PER_WEEK:
        raise InsufficientHistory("need more than a year of data to fit")
    opts = options or MinimizeOptions(max_evals=4000, restarts=1)
    sp = start or start_params(frame, orders)
    x0 = _pack(sp, rule_based)
    transforms = [Transform.IDENTITY] * x0.size
    special = frame.special.astype(bool)[SEED_PERIODS:]
    has_special = bool(special.any())

    def objective(x):
        p = _unpack(x, orders, rule_based)
        e, _, _ = residuals(frame, p)
        eps = e[SEED_PERIODS:]
        if rule_based and has_special:
            nll, _, _ = two_class_nll(eps, special)
        else:
            nll, _ = gaussian_nll(eps)
        return nll

    res = minimize(objective, x0, transforms, opts)
    params = _unpack(res.params, orders, rule_based)
    e, _, dropped = residuals(frame, params)
    eps = e[SEED_PERIODS:]
    if rule_based and has_special:
        nll, s2n, s2s = two_class_nll(eps, special)
    else:
        nll, s2n = gaussian_nll(eps)
        s2s = s2n
    res.sigma_n2, res.sigma_s2 = s2n, s2s
    if not res.converged:
        res.notes["convergence"] = "max evaluations reached; best point returned"
    params = replace(params, sigma_n2=s2n, sigma_s2=s2s)
    _soft_check_invertibility(params)
    return FittedSarma(
        params=params,
        orders=orders,
        rule_based=rule_based,
        tag=tag or ("rb-sarma" if rule_based else "sarma"),
        fit=res,
        dropped_terms=dropped,
    )


def aic(fitted: FittedSarma) -> float:
    k = 1 + fitted.orders.n_ar + fitted.orders.n_ma + 6
    if fitted.rule_based:
        k += 6
    k += 2 if fitted.rule_based else 1  # variances
    return 2.0 * k + 2.0 * fitted.fit.nll


def select_orders(
    frame: Frame,
    grid: list[SarmaOrders],
    rule_based: bool = True,
    options: MinimizeOptions | None = None,
) -> tuple[SarmaOrders, FittedSarma]:
    """Fit each candidate and return the AIC minimiser.

    Candidates that fail to fit are skipped; if all fail the last error
    propagates.
    """
    if not grid:
        raise ValueError("empty candidate grid")
    best: tuple[float, SarmaOrders, FittedSarma] | None = None
    last_exc: Exception | None = None
    for orders in grid:
        try:
            fitted = fit(frame, orders, rule_based=rule_based, options=options)
        except Exception as exc:  # candidate-level failure is not fatal
            last_exc = exc
            continue
        score = aic(fitted)
        if best is None or score < best[0]:
            best = (score, orders, fitted)
    if best is None:
        raise last_exc if last_exc else RuntimeError("no candidate could be fitted")
    return best[1], best[2]
