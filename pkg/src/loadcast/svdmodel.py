"""Intraweek SVD decomposition and rule-based SVD exponential smoothing.

Estimation weeks containing no special day are stacked into a (weeks x
336) matrix, centred on the overall mean log-load, and decomposed.  The
filter smooths the first k inter-week feature-series values: a level
term moves the whole projection, intraday and intraweek terms (gated off
on special days) move the directions associated with the current period
of day and week, and a full-history intrayear index absorbs special-day
structure exactly as in the HWT model.
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
from .framing import Frame, slice_frame
from .hwt import SEED_PERIODS, _check_lags
from .series import PERIODS_PER_DAY, PERIODS_PER_WEEK


@dataclass(frozen=True)
class SvdParams:
    lam: float
    delta: float
    omega: float
    alpha1: float
    alpha2: float
    phi: float
    sigma_n2: float | None = None
    sigma_s2: float | None = None


DEFAULT_START = SvdParams(lam=0.1, delta=0.05, omega=0.05, alpha1=0.05, alpha2=0.05, phi=0.3)

_TRANSFORMS_RB = [Transform.UNIT] * 5 + [Transform.SIGNED_UNIT]
_TRANSFORMS_PLAIN = [Transform.UNIT] * 4 + [Transform.SIGNED_UNIT]

DEFAULT_K_GRID = (5, 10, 20, 29, 40, 60)


@dataclass
class WeekMatrix:
    """Complete Monday-aligned special-free weeks, centred log-load."""

    rows: np.ndarray  # (w, 336)
    mean: float  # subtracted overall mean log-load
    week_starts: list[int]  # offset of each row's Monday period 1


@dataclass
class SvdBasis:
    vectors: np.ndarray  # (336, k) orthonormal columns
    singular_values: np.ndarray  # (k,) non-increasing

    @property
    def k(self) -> int:
        return int(self.vectors.shape[1])

    def truncate(self, k: int) -> "SvdBasis":
        if not 1 <= k <= self.vectors.shape[1]:
            raise ValueError(f"k={k} outside 1..{self.vectors.shape[1]}")
        return SvdBasis(self.vectors[:, :k], self.singular_values[:k])


def week_matrix(frame: Frame, limit: int | None = None) -> WeekMatrix:
    """Stack special-free Monday-aligned weeks from the frame head."""
    n = limit if limit is not None else frame.n
    starts = []
    for b in range(frame.n):
        if frame.pow_[b] != 0:
            continue
        if b + PERIODS_PER_WEEK > n:
            break
        if not frame.special[b : b + PERIODS_PER_WEEK].any():
            starts.append(b)
    if len(starts) < 2:
        raise InsufficientHistory("need at least two complete special-free weeks")
    rows = np.stack([frame.ylog[b : b + PERIODS_PER_WEEK] for b in starts])
    mean = float(np.mean(rows))
    return WeekMatrix(rows=rows - mean, mean=mean, week_starts=starts)


def decompose(frame: Frame, limit: int | None = None) -> tuple[WeekMatrix, SvdBasis]:
    """Full SVD of the week matrix; columns of the basis are orthonormal."""
    wm = week_matrix(frame, limit)
    _, s, vt = np.linalg.svd(wm.rows, full_matrices=False)
    return wm, SvdBasis(vectors=vt.T.copy(), singular_values=s.copy())


def _projections(basis: SvdBasis) -> tuple[np.ndarray, np.ndarray]:
    """Level and intraday update directions (Eq-19-style row sums)."""
    v = basis.vectors
    ones_proj = v.sum(axis=0)
    day_proj = np.zeros((PERIODS_PER_DAY, v.shape[1]))
    for u in range(PERIODS_PER_DAY):
        day_proj[u] = v[u::PERIODS_PER_DAY].sum(axis=0)
    return ones_proj, day_proj


@dataclass
class SvdSeeds:
    p0: np.ndarray  # (k,) projection of the mean special-free week
    a0: np.ndarray  # (n_seed,) first-year residuals
    mean: float
    basis: SvdBasis


def init_state(frame: Frame, basis: SvdBasis, wm: WeekMatrix, n_seed: int = SEED_PERIODS) -> SvdSeeds:
    if frame.n < 2 * SEED_PERIODS:
        raise InsufficientHistory("need at least two years of data to seed")
    mean_week = wm.rows.mean(axis=0)
    p0 = mean_week @ basis.vectors
    fitted_week = basis.vectors @ p0
    a0 = frame.ylog[:n_seed] - wm.mean - fitted_week[frame.pow_[:n_seed]]
    return SvdSeeds(p0=p0, a0=np.asarray(a0, dtype=np.float64), mean=wm.mean, basis=basis)


def filter_series(
    frame: Frame, params: SvdParams, seeds: SvdSeeds, n_seed: int = SEED_PERIODS
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Compiled RB-SVD pass; returns (eps, p_end, a, e_last)."""
    _check_lags(frame, n_seed)
    ones_proj, day_proj = _projections(seeds.basis)
    eps, p, a, e_last = _kernels.svd_filter(
        frame.ylog,
        frame.pod,
        frame.pow_,
        frame.lag,
        frame.special,
        seeds.mean,
        seeds.basis.vectors,
        ones_proj,
        day_proj,
        seeds.p0,
        seeds.a0,
        params.lam,
        params.delta,
        params.omega,
        params.alpha1,
        params.alpha2,
        params.phi,
        n_seed,
    )
    return eps, p, a, float(e_last)


def filter_step(
    state: dict,
    params: SvdParams,
    seeds: SvdSeeds,
    y_t: float,
    pod: int,
    pow_: int,
    is_special: bool,
    lag_m3: int,
) -> tuple[dict, float, float]:
    """Reference single-step recursion used by tests and the spec surface.

    ``state`` holds p (k,), intrayear (list, absolute offsets), last_error
    and offset.  Mirrors the compiled kernel's operation order.
    """
    idx = state["offset"] - lag_m3
    if lag_m3 <= 0 or idx < 0 or idx >= len(state["intrayear"]):
        raise MissingAnnualIndex(f"offset {state['offset']} lag {lag_m3} unresolvable")
    v = seeds.basis.vectors
    ones_proj, day_proj = _projections(seeds.basis)
    a_ref = state["intrayear"][idx]
    base = seeds.mean + a_ref + float(state["p"] @ v[pow_])
    pred = base + params.phi * state["last_error"]
    e = y_t - base
    if not is_special:
        state["p"] = state["p"] + (
            params.lam * ones_proj + params.delta * day_proj[pod] + params.omega * v[pow_]
        ) * e
        state["intrayear"].append(a_ref + params.alpha1 * e)
    else:
        state["p"] = state["p"] + params.lam * ones_proj * e
        state["intrayear"].append(a_ref + params.alpha2 * e)
    state["last_error"] = e
    state["offset"] += 1
    return state, e, pred


@dataclass
class FittedSvd:
    params: SvdParams
    k: int
    rule_based: bool
    tag: str
    basis: SvdBasis | None = None
    fit: FitResult | None = None
    n_seed: int = SEED_PERIODS

    def rolling_log_forecasts(self, frame: Frame, first_origin: int, horizon: int) -> np.ndarray:
        _check_lags(frame, self.n_seed)
        wm, full = decompose(frame, limit=first_origin + 1)
        basis = self.basis if self.basis is not None else full.truncate(self.k)
        seeds = init_state(frame, basis, wm, self.n_seed)
        ones_proj, day_proj = _projections(basis)
        p = self.params
        return _kernels.svd_rolling(
            frame.ylog,
            frame.pod,
            frame.pow_,
            frame.lag,
            frame.special,
            seeds.mean,
            basis.vectors,
            ones_proj,
            day_proj,
            seeds.p0,
            seeds.a0,
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
    k: int,
    rule_based: bool = True,
    start: SvdParams = DEFAULT_START,
    options: MinimizeOptions | None = None,
    tag: str | None = None,
) -> FittedSvd:
    """Maximum-likelihood fit of the smoothing parameters at a given k.

    The basis comes from the estimation frame's special-free weeks and is
    stored on the fitted model.
    """
    opts = options or MinimizeOptions(max_evals=2000, restarts=2)
    wm, full = decompose(frame)
    basis = full.truncate(k)
    seeds = init_state(frame, basis, wm)
    special = frame.special.astype(bool)[SEED_PERIODS:]

    if rule_based:
        def objective(x):
            p = SvdParams(*x)
            eps, _, _, _ = filter_series(frame, p, seeds)
            nll, _, _ = two_class_nll(eps, special)
            return nll

        x0 = np.array([start.lam, start.delta, start.omega, start.alpha1, start.alpha2, start.phi])
        res = minimize(objective, x0, _TRANSFORMS_RB, opts)
        p = SvdParams(*res.params)
        eps, _, _, _ = filter_series(frame, p, seeds)
        nll, s2n, s2s = two_class_nll(eps, special)
    else:
        def objective(x):
            lam, delta, omega, alpha1, phi = x
            p = SvdParams(lam, delta, omega, alpha1, alpha1, phi)
            eps, _, _, _ = filter_series(frame, p, seeds)
            nll, _ = gaussian_nll(eps)
            return nll

        x0 = np.array([start.lam, start.delta, start.omega, start.alpha1, start.phi])
        res = minimize(objective, x0, _TRANSFORMS_PLAIN, opts)
        lam, delta, omega, alpha1, phi = res.params
        p = SvdParams(lam, delta, omega, alpha1, alpha1, phi)
        eps, _, _, _ = filter_series(frame, p, seeds)
        nll, s2n = gaussian_nll(eps)
        s2s = s2n

    res.sigma_n2, res.sigma_s2 = s2n, s2s
    params = replace(p, sigma_n2=s2n, sigma_s2=s2s)
    return FittedSvd(
        params=params,
        k=k,
        rule_based=rule_based,
        tag=tag or ("rb-svd" if rule_based else "svd"),
        basis=basis,
        fit=res,
    )


def select_k(
    frame: Frame,
    candidates: tuple[int, ...] = DEFAULT_K_GRID,
    holdout: int = SEED_PERIODS,
    rule_based: bool = True,
    options: MinimizeOptions | None = None,
) -> int:
    """Pick k by one-step MAPE on the final ``holdout`` periods.

    Smoothing parameters are refitted per candidate on the pre-holdout
    portion; the basis is also restricted to pre-holdout weeks.
    """
    if not candidates:
        raise ValueError("no candidate k values")
    n_train = frame.n - holdout
    if n_train < 2 * SEED_PERIODS:
        raise InsufficientHistory("not enough data before the holdout year")
    train = slice_frame(frame, n_train)
    opts = options or MinimizeOptions(max_evals=600, restarts=1)
    best_k = None
    best_mape = np.inf
    for k in candidates:
        fitted = fit(train, k=k, rule_based=rule_based, options=opts)
        wm, full = decompose(frame, limit=n_train)
        basis = full.truncate(k)
        seeds = init_state(frame, basis, wm)
        eps, _, _, _ = filter_series(frame, fitted.params, seeds)
        hold_eps = eps[-holdout:]
        mape = float(np.mean(np.abs(1.0 - np.exp(-hold_eps))))
        if mape < best_mape - 1e-15:
            best_mape = mape
            best_k = k
    return int(best_k)
