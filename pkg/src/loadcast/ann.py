"""Per-horizon feedforward networks on doubly-differenced log-load.

One single-hidden-layer network per forecast horizon, sigmoid hidden and
linear output, trained with full-batch gradient descent (momentum, L2,
early stopping on the final estimation year).  Inputs are the differenced
load at the forecast origin and at short, intraday, intraweek and
rule-based annual lags, all observable at the origin; the calendar
variant appends day/week/period counters, their sine/cosine transforms,
and the normal-day indicator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .errors import Divergence, MissingAnnualIndex, SeriesTooShort
from .framing import Frame
from .sarma import annual_lag_arrays
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK

DIFF_WARMUP = PERIODS_PER_DAY + PERIODS_PER_WEEK  # 384

_COUNTER_PERIODS = (366.0, 7.0, 336.0, 48.0)


@dataclass(frozen=True)
class AnnConfig:
    horizon: int
    hidden_units: int = 10
    learning_rate: float = 0.01
    momentum: float = 0.9
    l2: float = 1e-4
    epochs: int = 200
    patience: int = 20
    calendar_inputs: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.horizon <= PERIODS_PER_DAY:
            raise ValueError("horizon must be in 1..48")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be positive")


def difference(ylog: np.ndarray) -> np.ndarray:
    """(1 - L^48)(1 - L^336) applied to log-load; warm-up marked NaN."""
    y = np.asarray(ylog, dtype=np.float64)
    if y.size <= DIFF_WARMUP:
        raise SeriesTooShort(f"need more than {DIFF_WARMUP} observations to difference")
    z = np.full(y.size, np.nan)
    z[DIFF_WARMUP:] = (
        y[DIFF_WARMUP:]
        - y[DIFF_WARMUP - PERIODS_PER_DAY : -PERIODS_PER_DAY]
        - y[DIFF_WARMUP - PERIODS_PER_WEEK : -PERIODS_PER_WEEK]
        + y[:-DIFF_WARMUP]
    )
    return z


def undifference(z_hat: float, ylog: np.ndarray, t: int) -> float:
    """Invert the differencing at index ``t`` given observed log-load."""
    return (
        z_hat
        + ylog[t - PERIODS_PER_DAY]
        + ylog[t - PERIODS_PER_WEEK]
        - ylog[t - DIFF_WARMUP]
    )


def static_deltas(h: int) -> list[int]:
    """Target-relative lags of the non-annual inputs, de-duplicated.

    Expressed from the forecast origin the lag set is {0, 1, 2, m1-h,
    2m1-h, 3m1-h, m2-h, 2m2-h, 3m2-h}; adding h converts to deltas from
    the target, so the seasonal entries land exactly on t-m1, t-2m1 etc.
    """
    raw = [
        h,
        h + 1,
        h + 2,
        PERIODS_PER_DAY,
        2 * PERIODS_PER_DAY,
        3 * PERIODS_PER_DAY,
        PERIODS_PER_WEEK,
        2 * PERIODS_PER_WEEK,
        3 * PERIODS_PER_WEEK,
    ]
    out: list[int] = []
    for d in raw:
        if d not in out:
            out.append(d)
    return out


def feature_count(h: int, calendar_inputs: bool) -> int:
    n = len(static_deltas(h)) + 3
    if calendar_inputs:
        n += 4 + 8 + 1
    return n


def _doy_array(frame: Frame) -> np.ndarray:
    n_days = (frame.series.end.date - frame.start.date).days + 1
    doy = np.empty(n_days, dtype=np.float64)
    d = frame.start.date
    for i in range(n_days):
        doy[i] = d.timetuple().tm_yday
        d += timedelta(days=1)
    base = frame.start.period - 1
    day_index = (base + np.arange(frame.n, dtype=np.int64)) // PERIODS_PER_DAY
    return doy[day_index]


def calendar_features(frame: Frame, targets: np.ndarray) -> np.ndarray:
    """Counters, their sin/cos at the counter's own period, and I_N."""
    doy = _doy_array(frame)[targets]
    dow = frame.pow_[targets] // PERIODS_PER_DAY + 1.0
    how = frame.pow_[targets] + 1.0
    hod = frame.pod[targets] + 1.0
    counters = np.column_stack([doy, dow, how, hod])
    cols = [counters]
    for j, period in enumerate(_COUNTER_PERIODS):
        ang = 2.0 * np.pi * counters[:, j] / period
        cols.append(np.column_stack([np.sin(ang), np.cos(ang)]))
    i_n = 1.0 - frame.special[targets].astype(np.float64)
    cols.append(i_n[:, None])
    return np.hstack(cols)


@dataclass
class AnnDataset:
    """Design matrix for one horizon over a frame."""

    horizon: int
    targets: np.ndarray  # (m,) absolute offsets of the forecast targets
    x: np.ndarray  # (m, n_in)
    y: np.ndarray  # (m,) differenced log-load at the target


def build_dataset(
    frame: Frame,
    z: np.ndarray,
    h: int,
    calendar_inputs: bool,
    t_start: int,
    t_stop: int,
) -> AnnDataset:
    """Rows for every target in [t_start, t_stop) with all lags resolvable."""
    la, lb, lc = annual_lag_arrays(frame)
    deltas = np.array(static_deltas(h), dtype=np.int64)
    targets = np.arange(t_start, t_stop, dtype=np.int64)

    ann_idx = np.stack(
        [targets - la[targets], targets - lb[targets], targets - lc[targets]]
    ).T
    valid = (
        (la[targets] > 0)
        & (lb[targets] > 0)
        & (lc[targets] > 0)
        & (ann_idx.min(axis=1) >= DIFF_WARMUP)
        & ((targets[:, None] - deltas[None, :]).min(axis=1) >= DIFF_WARMUP)
    )
    targets = targets[valid]
    if targets.size == 0:
        raise SeriesTooShort(f"no usable targets for horizon {h}")
    ann_idx = ann_idx[valid]

    x_static = z[targets[:, None] - deltas[None, :]]
    x_ann = z[ann_idx]
    x = np.hstack([x_static, x_ann])
    if calendar_inputs:
        x = np.hstack([x, calendar_features(frame, targets)])
    return AnnDataset(horizon=h, targets=targets, x=x, y=z[targets])


def build_features(
    frame: Frame, z: np.ndarray, t: int, h: int, calendar_inputs: bool
) -> np.ndarray:
    """Single input vector for target offset ``t``; spec-level surface."""
    la, lb, lc = annual_lag_arrays(frame)
    if la[t] <= 0 or lb[t] <= 0 or lc[t] <= 0:
        raise MissingAnnualIndex(f"annual lags unresolvable at offset {t}")
    deltas = static_deltas(h)
    idx = [t - d for d in deltas] + [t - int(la[t]), t - int(lb[t]), t - int(lc[t])]
    if min(idx) < DIFF_WARMUP:
        raise SeriesTooShort(f"feature index before differencing warm-up at offset {t}")
    x = z[np.array(idx, dtype=np.int64)]
    if calendar_inputs:
        x = np.concatenate([x, calendar_features(frame, np.array([t]))[0]])
    return x


@dataclass
class AnnModel:
    config: AnnConfig
    w1: np.ndarray  # (n_in, units)
    b1: np.ndarray  # (units,)
    w2: np.ndarray  # (units,)
    b2: float
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float
    y_sd: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Denormalised differenced-load predictions for raw inputs."""
        xn = (x - self.x_mean) / self.x_sd
        hidden = _sigmoid(xn @ self.w1 + self.b1)
        out = hidden @ self.w2 + self.b2
        return out * self.y_sd + self.y_mean


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def init_model(cfg: AnnConfig, n_in: int) -> AnnModel:
    """Seeded uniform +/-1/sqrt(fan-in) weight initialisation."""
    rng = np.random.default_rng(cfg.seed)
    s1 = 1.0 / np.sqrt(n_in)
    s2 = 1.0 / np.sqrt(cfg.hidden_units)
    return AnnModel(
        config=cfg,
        w1=rng.uniform(-s1, s1, size=(n_in, cfg.hidden_units)),
        b1=rng.uniform(-s1, s1, size=cfg.hidden_units),
        w2=rng.uniform(-s2, s2, size=cfg.hidden_units),
        b2=float(rng.uniform(-s2, s2)),
        x_mean=np.zeros(n_in),
        x_sd=np.ones(n_in),
        y_mean=0.0,
        y_sd=1.0,
    )


def loss_and_grads(
    w1: np.ndarray,
    b1: np.ndarray,
    w2: np.ndarray,
    b2: float,
    xn: np.ndarray,
    yn: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, float]:
    """Mean squared error + L2 penalty on weights, with analytic gradients."""
    m = xn.shape[0]
    z1 = xn @ w1 + b1
    hidden = _sigmoid(z1)
    out = hidden @ w2 + b2
    err = out - yn
    loss = float(np.mean(err**2)) + l2 * (float(np.sum(w1**2)) + float(np.sum(w2**2)))
    dout = 2.0 * err / m
    gw2 = hidden.T @ dout + 2.0 * l2 * w2
    gb2 = float(np.sum(dout))
    dz1 = np.outer(dout, w2) * hidden * (1.0 - hidden)
    gw1 = xn.T @ dz1 + 2.0 * l2 * w1
    gb1 = dz1.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2


def train(
    dataset: AnnDataset,
    cfg: AnnConfig,
    holdout_mask: np.ndarray,
) -> tuple[AnnModel, dict]:
    """Gradient descent with momentum; returns the best hold-out model.

    Normalisation statistics come from the training rows only; the
    hold-out (final estimation year) drives early stopping.
    """
    train_mask = ~holdout_mask
    if not train_mask.any():
        raise ValueError("empty training set")
    x_tr = dataset.x[train_mask]
    y_tr = dataset.y[train_mask]

    x_mean = x_tr.mean(axis=0)
    x_sd = x_tr.std(axis=0)
    x_sd[x_sd < 1e-12] = 1.0
    y_mean = float(y_tr.mean())
    y_sd = float(y_tr.std())
    if y_sd < 1e-12:
        y_sd = 1.0

    xn_tr = (x_tr - x_mean) / x_sd
    yn_tr = (y_tr - y_mean) / y_sd
    has_holdout = bool(holdout_mask.any())
    if has_holdout:
        xn_ho = (dataset.x[holdout_mask] - x_mean) / x_sd
        yn_ho = (dataset.y[holdout_mask] - y_mean) / y_sd

    model = init_model(cfg, dataset.x.shape[1])
    model.x_mean, model.x_sd = x_mean, x_sd
    model.y_mean, model.y_sd = y_mean, y_sd

    w1, b1, w2, b2 = model.w1, model.b1, model.w2, model.b2
    vw1 = np.zeros_like(w1)
    vb1 = np.zeros_like(b1)
    vw2 = np.zeros_like(w2)
    vb2 = 0.0

    def holdout_mse():
        hidden = _sigmoid(xn_ho @ w1 + b1)
        return float(np.mean((hidden @ w2 + b2 - yn_ho) ** 2))

    best = (np.inf, w1.copy(), b1.copy(), w2.copy(), b2)
    stale = 0
    history = []
    for epoch in range(cfg.epochs):
        loss, gw1, gb1, gw2, gb2 = loss_and_grads(w1, b1, w2, b2, xn_tr, yn_tr, cfg.l2)
        if not np.isfinite(loss):
            raise Divergence(
                f"non-finite loss at epoch {epoch} (lr={cfg.learning_rate}, units={cfg.hidden_units})"
            )
        vw1 = cfg.momentum * vw1 - cfg.learning_rate * gw1
        vb1 = cfg.momentum * vb1 - cfg.learning_rate * gb1
        vw2 = cfg.momentum * vw2 - cfg.learning_rate * gw2
        vb2 = cfg.momentum * vb2 - cfg.learning_rate * gb2
        w1 = w1 + vw1
        b1 = b1 + vb1
        w2 = w2 + vw2
        b2 = b2 + vb2

        score = holdout_mse() if has_holdout else loss
        history.append((loss, score))
        if score < best[0] - 1e-12:
            best = (score, w1.copy(), b1.copy(), w2.copy(), b2)
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break

    if cfg.epochs > 0 and best[0] < np.inf:
        _, w1, b1, w2, b2 = best
    model.w1, model.b1, model.w2, model.b2 = w1, b1, w2, float(b2)
    info = {"epochs_run": len(history), "best_holdout_mse": best[0], "history": history}
    return model, info


def select_hyperparams(
    grid: list[AnnConfig], dataset: AnnDataset, holdout_mask: np.ndarray
) -> AnnConfig:
    """Grid point with the lowest hold-out MSE; ties prefer fewer hidden
    units, then a lower learning rate."""
    if not grid:
        raise ValueError("empty hyperparameter grid")
    scored = []
    for i, cfg in enumerate(grid):
        _, info = train(dataset, cfg, holdout_mask)
        scored.append((info["best_holdout_mse"], cfg.hidden_units, cfg.learning_rate, i, cfg))
    scored.sort(key=lambda s: (round(s[0], 12), s[1], s[2], s[3]))
    return scored[0][4]


@dataclass
class FittedAnn:
    """One trained network per horizon; untrained horizons forecast NaN."""

    models: dict[int, AnnModel]
    calendar_inputs: bool
    rule_based: bool
    tag: str
    info: dict = field(default_factory=dict)

    def rolling_log_forecasts(self, frame: Frame, first_origin: int, horizon: int) -> np.ndarray:
        z = difference(frame.ylog)
        n_origins = (frame.n - 1 - horizon) - first_origin + 1
        preds = np.full((n_origins, horizon), np.nan)
        la, lb, lc = annual_lag_arrays(frame)
        origins = np.arange(first_origin, first_origin + n_origins, dtype=np.int64)
        for h, model in self.models.items():
            if h > horizon:
                continue
            targets = origins + h
            deltas = np.array(static_deltas(h), dtype=np.int64)
            ann_idx = np.stack(
                [targets - la[targets], targets - lb[targets], targets - lc[targets]]
            ).T
            valid = (
                (la[targets] > 0)
                & (lb[targets] > 0)
                & (lc[targets] > 0)
                & (ann_idx.min(axis=1) >= DIFF_WARMUP)
            )
            x = np.hstack(
                [
                    z[targets[:, None] - deltas[None, :]],
                    z[np.where(valid[:, None], ann_idx, DIFF_WARMUP)],
                ]
            )
            if self.calendar_inputs:
                x = np.hstack([x, calendar_features(frame, targets)])
            z_hat = model.predict(x)
            ylog = frame.ylog
            y_hat = (
                z_hat
                + ylog[targets - PERIODS_PER_DAY]
                + ylog[targets - PERIODS_PER_WEEK]
                - ylog[targets - DIFF_WARMUP]
            )
            y_hat[~valid] = np.nan
            preds[:, h - 1] = y_hat
        return preds


def fit(
    frame: Frame,
    horizons: tuple[int, ...] = (1, 6, 12, 24, 48),
    base: AnnConfig | None = None,
    calendar_inputs: bool = False,
    rule_based: bool = True,
    tag: str | None = None,
    holdout_periods: int = 365 * PERIODS_PER_DAY,
) -> FittedAnn:
    """Train one network per horizon on the estimation frame.

    The frame's table determines the annual lags, so a rule table yields
    the rule-based variant and an all-normal table the original one.
    """
    z = difference(frame.ylog)
    holdout_from = frame.n - holdout_periods
    models: dict[int, AnnModel] = {}
    info: dict = {}
    for h in horizons:
        cfg = AnnConfig(
            horizon=h,
            hidden_units=(base.hidden_units if base else 10),
            learning_rate=(base.learning_rate if base else 0.01),
            momentum=(base.momentum if base else 0.9),
            l2=(base.l2 if base else 1e-4),
            epochs=(base.epochs if base else 200),
            patience=(base.patience if base else 20),
            calendar_inputs=calendar_inputs,
            seed=(base.seed if base else 0) + h,
        )
        ds = build_dataset(frame, z, h, calendar_inputs, DIFF_WARMUP, frame.n)
        holdout_mask = ds.targets >= holdout_from
        model, tinfo = train(ds, cfg, holdout_mask)
        models[h] = model
        info[h] = {k: v for k, v in tinfo.items() if k != "history"}
    return FittedAnn(
        models=models,
        calendar_inputs=calendar_inputs,
        rule_based=rule_based,
        tag=tag or ("rb-ann" if rule_based else "ann"),
        info=info,
    )
