"""Numba-compiled inner loops for the recursive filters.

The recursions feed each error back into state, so they cannot be
vectorised; these kernels keep fitting (thousands of likelihood
evaluations over ~140k periods) and rolling backtests fast.  All callers
validate lag arrays before entering a kernel: within the filtered range a
lag is positive and resolves inside history.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def hwt_filter(
    y,
    pod,
    pow_,
    lag,
    special,
    level0,
    d0,
    w0,
    a0,
    lam,
    delta,
    omega,
    alpha1,
    alpha2,
    phi,
    n_seed,
):
    """RB-HWT filtering pass from ``n_seed`` to the end of ``y``.

    Returns (eps, level, d, w, a, e_last) where eps are one-step
    prediction errors y_t - (base + phi*e_prev) and ``a`` is the
    full-history intrayear index (seeded over [0, n_seed)).
    """
    n = y.shape[0]
    a = np.empty(n)
    a[:n_seed] = a0
    d = d0.copy()
    w = w0.copy()
    level = level0
    e_prev = 0.0
    eps = np.empty(n - n_seed)
    for t in range(n_seed, n):
        a_ref = a[t - lag[t]]
        base = level + d[pod[t]] + w[pow_[t]] + a_ref
        e = y[t] - base
        eps[t - n_seed] = e - phi * e_prev
        level += lam * e
        if special[t] == 0:
            d[pod[t]] += delta * e
            w[pow_[t]] += omega * e
            a[t] = a_ref + alpha1 * e
        else:
            a[t] = a_ref + alpha2 * e
        e_prev = e
    return eps, level, d, w, a, e_prev


@njit(cache=True)
def hwt_rolling(
    y,
    pod,
    pow_,
    lag,
    special,
    level0,
    d0,
    w0,
    a0,
    lam,
    delta,
    omega,
    alpha1,
    alpha2,
    phi,
    n_seed,
    first_origin,
    horizon,
):
    """Filter the series and forecast 1..horizon at every rolling origin.

    Origin T uses observations up to and including T; preds[j, h-1] is the
    log-scale forecast of y[T+h] for T = first_origin + j.
    """
    n = y.shape[0]
    n_origins = (n - 1 - horizon) - first_origin + 1
    preds = np.full((n_origins, horizon), np.nan)
    a = np.empty(n)
    a[:n_seed] = a0
    d = d0.copy()
    w = w0.copy()
    level = level0
    e_prev = 0.0
    for t in range(n_seed, n):
        a_ref = a[t - lag[t]]
        base = level + d[pod[t]] + w[pow_[t]] + a_ref
        e = y[t] - base
        level += lam * e
        if special[t] == 0:
            d[pod[t]] += delta * e
            w[pow_[t]] += omega * e
            a[t] = a_ref + alpha1 * e
        else:
            a[t] = a_ref + alpha2 * e
        e_prev = e
        if first_origin <= t <= n - 1 - horizon:
            j = t - first_origin
            phih = 1.0
            for h in range(1, horizon + 1):
                phih *= phi
                tt = t + h
                preds[j, h - 1] = (
                    level + d[pod[tt]] + w[pow_[tt]] + a[tt - lag[tt]] + phih * e_prev
                )
    return preds


@njit(cache=True)
def svd_filter(
    y,
    pod,
    pow_,
    lag,
    special,
    mean_y,
    basis,
    ones_proj,
    day_proj,
    p0,
    a0,
    lam,
    delta,
    omega,
    alpha1,
    alpha2,
    phi,
    n_seed,
):
    """RB-SVD filtering pass; mirrors hwt_filter with a k-vector level.

    basis: (336, k) intraweek feature vectors; ones_proj: column sums of
    the basis; day_proj[u]: sum of the 7 rows sharing period-of-day u.
    """
    n = y.shape[0]
    k = basis.shape[1]
    a = np.empty(n)
    a[:n_seed] = a0
    p = p0.copy()
    e_prev = 0.0
    eps = np.empty(n - n_seed)
    for t in range(n_seed, n):
        s = pow_[t]
        u = pod[t]
        a_ref = a[t - lag[t]]
        base = mean_y + a_ref
        for i in range(k):
            base += p[i] * basis[s, i]
        e = y[t] - base
        eps[t - n_seed] = e - phi * e_prev
        if special[t] == 0:
            for i in range(k):
                p[i] += (
                    lam * ones_proj[i] + delta * day_proj[u, i] + omega * basis[s, i]
                ) * e
            a[t] = a_ref + alpha1 * e
        else:
            for i in range(k):
                p[i] += lam * ones_proj[i] * e
            a[t] = a_ref + alpha2 * e
        e_prev = e
    return eps, p, a, e_prev


@njit(cache=True)
def svd_rolling(
    y,
    pod,
    pow_,
    lag,
    special,
    mean_y,
    basis,
    ones_proj,
    day_proj,
    p0,
    a0,
    lam,
    delta,
    omega,
    alpha1,
    alpha2,
    phi,
    n_seed,
    first_origin,
    horizon,
):
    n = y.shape[0]
    k = basis.shape[1]
    n_origins = (n - 1 - horizon) - first_origin + 1
    preds = np.full((n_origins, horizon), np.nan)
    a = np.empty(n)
    a[:n_seed] = a0
    p = p0.copy()
    e_prev = 0.0
    for t in range(n_seed, n):
        s = pow_[t]
        u = pod[t]
        a_ref = a[t - lag[t]]
        base = mean_y + a_ref
        for i in range(k):
            base += p[i] * basis[s, i]
        e = y[t] - base
        if special[t] == 0:
            for i in range(k):
                p[i] += (
                    lam * ones_proj[i] + delta * day_proj[u, i] + omega * basis[s, i]
                ) * e
            a[t] = a_ref + alpha1 * e
        else:
            for i in range(k):
                p[i] += lam * ones_proj[i] * e
            a[t] = a_ref + alpha2 * e
        e_prev = e
        if first_origin <= t <= n - 1 - horizon:
            j = t - first_origin
            phih = 1.0
            for h in range(1, horizon + 1):
                phih *= phi
                tt = t + h
                val = mean_y + a[tt - lag[tt]] + phih * e_prev
                ss = pow_[tt]
                for i in range(k):
                    val += p[i] * basis[ss, i]
                preds[j, h - 1] = val
    return preds


@njit(cache=True)
def sarma_residuals(
    ydev,
    special,
    lag_a,
    lag_b,
    lag_c,
    ar_lags,
    ar_coefs,
    ma_lags,
    ma_coefs,
    ann_ar_n,
    ann_ar_s,
    ann_ma_n,
    ann_ma_s,
    e,
    eexp,
    t_start,
):
    """Conditional residual recursion for RB-SARMA (Eq 14/16 style).

    ydev = y - c.  lag_a/b/c hold the three annual lags per period, -1
    when unresolvable (term dropped; equivalent to pre-sample zeroing).
    ``e`` and ``eexp`` must be preallocated length-n arrays whose first
    ``t_start`` entries are already valid; the recursion resumes there.
    Returns the count of annual terms dropped for t >= t_start.
    """
    n = ydev.shape[0]
    yexp = np.empty(n)
    dropped = 0
    for u in range(n):
        acc = ydev[u]
        if special[u] != 0:
            c1, c2, c3 = ann_ar_s[0], ann_ar_s[1], ann_ar_s[2]
        else:
            c1, c2, c3 = ann_ar_n[0], ann_ar_n[1], ann_ar_n[2]
        la, lb, lc = lag_a[u], lag_b[u], lag_c[u]
        if la > 0 and u - la >= 0:
            acc += c1 * ydev[u - la]
        elif u >= t_start:
            dropped += 1
        if lb > 0 and u - lb >= 0:
            acc += c2 * ydev[u - lb]
        elif u >= t_start:
            dropped += 1
        if lc > 0 and u - lc >= 0:
            acc += c3 * ydev[u - lc]
        elif u >= t_start:
            dropped += 1
        yexp[u] = acc

    n_ar = ar_lags.shape[0]
    n_ma = ma_lags.shape[0]
    for t in range(t_start, n):
        acc = yexp[t]
        for i in range(n_ar):
            s = t - ar_lags[i]
            if s >= 0:
                acc += ar_coefs[i] * yexp[s]
        for i in range(n_ma):
            s = t - ma_lags[i]
            if s >= 0:
                acc -= ma_coefs[i] * eexp[s]
        if special[t] != 0:
            k1, k2, k3 = ann_ma_s[0], ann_ma_s[1], ann_ma_s[2]
        else:
            k1, k2, k3 = ann_ma_n[0], ann_ma_n[1], ann_ma_n[2]
        ann = 0.0
        la, lb, lc = lag_a[t], lag_b[t], lag_c[t]
        if la > 0 and t - la >= 0:
            ann += k1 * e[t - la]
        if lb > 0 and t - lb >= 0:
            ann += k2 * e[t - lb]
        if lc > 0 and t - lc >= 0:
            ann += k3 * e[t - lc]
        e[t] = acc - ann
        eexp[t] = acc
    return dropped


@njit(cache=True)
def sarma_rolling(
    ydev,
    special,
    lag_a,
    lag_b,
    lag_c,
    ar_lags,
    ar_coefs,
    ma_lags,
    ma_coefs,
    ann_ar_n,
    ann_ar_s,
    ann_ma_n,
    ann_ma_s,
    e,
    eexp,
    first_origin,
    horizon,
):
    """Forecast 1..horizon at each origin with future residuals zeroed.

    ``e``/``eexp`` are the full-sample residual arrays from
    sarma_residuals under the same parameters.  Returns preds in
    deviation-from-c space; the caller adds c back.
    """
    n = ydev.shape[0]
    n_origins = (n - 1 - horizon) - first_origin + 1
    preds = np.full((n_origins, horizon), np.nan)
    n_ar = ar_lags.shape[0]
    n_ma = ma_lags.shape[0]

    yexp = np.empty(n)
    for u in range(n):
        acc = ydev[u]
        if special[u] != 0:
            c1, c2, c3 = ann_ar_s[0], ann_ar_s[1], ann_ar_s[2]
        else:
            c1, c2, c3 = ann_ar_n[0], ann_ar_n[1], ann_ar_n[2]
        la, lb, lc = lag_a[u], lag_b[u], lag_c[u]
        if la > 0 and u - la >= 0:
            acc += c1 * ydev[u - la]
        if lb > 0 and u - lb >= 0:
            acc += c2 * ydev[u - lb]
        if lc > 0 and u - lc >= 0:
            acc += c3 * ydev[u - lc]
        yexp[u] = acc

    ydev_f = np.empty(horizon)
    yexp_f = np.empty(horizon)
    for j in range(n_origins):
        origin = first_origin + j
        for h in range(1, horizon + 1):
            t = origin + h
            if special[t] != 0:
                a1, a2, a3 = ann_ar_s[0], ann_ar_s[1], ann_ar_s[2]
                k1, k2, k3 = ann_ma_s[0], ann_ma_s[1], ann_ma_s[2]
            else:
                a1, a2, a3 = ann_ar_n[0], ann_ar_n[1], ann_ar_n[2]
                k1, k2, k3 = ann_ma_n[0], ann_ma_n[1], ann_ma_n[2]
            la, lb, lc = lag_a[t], lag_b[t], lag_c[t]

            # annual AR terms at t reach at least a year back: observed.
            ann_ar = 0.0
            if la > 0 and t - la >= 0:
                ann_ar += a1 * ydev[t - la]
            if lb > 0 and t - lb >= 0:
                ann_ar += a2 * ydev[t - lb]
            if lc > 0 and t - lc >= 0:
                ann_ar += a3 * ydev[t - lc]

            acc = 0.0
            for i in range(n_ar):
                s = t - ar_lags[i]
                if s < 0:
                    continue
                if s > origin:
                    acc += ar_coefs[i] * yexp_f[s - origin - 1]
                else:
                    acc += ar_coefs[i] * yexp[s]
            ma_acc = 0.0
            for i in range(n_ma):
                s = t - ma_lags[i]
                if s < 0:
                    continue
                if s > origin:
                    # future residual is zero; only its annual echo remains
                    es = 0.0
                    sla, slb, slc = lag_a[s], lag_b[s], lag_c[s]
                    if special[s] != 0:
                        m1, m2, m3 = ann_ma_s[0], ann_ma_s[1], ann_ma_s[2]
                    else:
                        m1, m2, m3 = ann_ma_n[0], ann_ma_n[1], ann_ma_n[2]
                    if sla > 0 and s - sla >= 0:
                        es += m1 * e[s - sla]
                    if slb > 0 and s - slb >= 0:
                        es += m2 * e[s - slb]
                    if slc > 0 and s - slc >= 0:
                        es += m3 * e[s - slc]
                    ma_acc += ma_coefs[i] * es
                else:
                    ma_acc += ma_coefs[i] * eexp[s]
            ann_ma = 0.0
            if la > 0 and t - la >= 0:
                ann_ma += k1 * e[t - la]
            if lb > 0 and t - lb >= 0:
                ann_ma += k2 * e[t - lb]
            if lc > 0 and t - lc >= 0:
                ann_ma += k3 * e[t - lc]

            yhat = ma_acc + ann_ma - acc - ann_ar
            ydev_f[h - 1] = yhat
            yexp_f[h - 1] = yhat + ann_ar
            preds[j, h - 1] = yhat
    return preds
