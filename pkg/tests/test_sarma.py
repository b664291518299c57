from datetime import date

import numpy as np
import pytest

from loadcast import sarma
from loadcast.estimate import MinimizeOptions
from loadcast.framing import build_frame, slice_frame
from loadcast.gbcal import Calendar, NormalCalendar
from loadcast.hwt import SEED_PERIODS
from loadcast.rules import RuleId, build_table
from loadcast.sarma import (
    DEFAULT_ORDERS,
    SarmaOrders,
    SarmaParams,
    annual_lag_arrays,
    annual_lags,
    expand_product,
    residuals,
    static_ar_expansion,
)
from loadcast.series import LoadSeries, PeriodStamp

YEAR = 365 * 48


def _params(orders=DEFAULT_ORDERS, **over):
    base = dict(
        c=0.0,
        ar_short=np.zeros(orders.p),
        ar_intraday=np.zeros(orders.P1),
        ar_intraweek=np.zeros(orders.P2),
        ma_short=np.zeros(orders.q),
        ma_intraday=np.zeros(orders.Q1),
        ma_intraweek=np.zeros(orders.Q2),
        annual_ar_normal=np.zeros(3),
        annual_ma_normal=np.zeros(3),
        annual_ar_special=np.zeros(3),
        annual_ma_special=np.zeros(3),
    )
    base.update(over)
    return SarmaParams(**base)


def _random_frame(n=2000, seed=0, start=date(2001, 1, 1)):
    rng = np.random.default_rng(seed)
    series = LoadSeries(PeriodStamp(start, 1), np.exp(rng.normal(8, 0.1, n)))
    cal = NormalCalendar()
    table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
    return build_frame(series, cal, table)


class TestExpansion:
    def test_against_dense_convolution(self):
        rng = np.random.default_rng(2)
        factors = [
            (1, rng.normal(size=2)),
            (48, rng.normal(size=1)),
            (336, rng.normal(size=1)),
        ]
        lags, coefs = expand_product(factors)

        dense = np.array([1.0])
        for period, cs in factors:
            poly = np.zeros(period * len(cs) + 1)
            poly[0] = 1.0
            for i, c in enumerate(cs, start=1):
                poly[i * period] = c
            dense = np.convolve(dense, poly)
        want = {l: dense[l] for l in np.nonzero(dense)[0] if l > 0}
        assert dict(zip(lags, coefs)) == pytest.approx(want)

    def test_empty_orders_give_empty_set(self):
        lags, coefs = expand_product([(1, np.array([])), (48, np.array([]))])
        assert lags.size == 0 and coefs.size == 0

    def test_constant_lag_nesting(self):
        frame = _random_frame(n=800)
        # constant table: every lag equals 17472 but offsets run out, so
        # fabricate a small frame with a uniform 100-period lag
        frame.lag[:] = 100
        la, lb, lc = annual_lag_arrays(frame)
        assert la[700] == 100 and lb[700] == 200 and lc[700] == 300
        assert annual_lags(frame, 700) == (100, 200, 300)
        # near the start the nested lags leave history
        assert annual_lags(frame, 150) == (100, 200, None)


class TestResiduals:
    def test_all_zero_coefficients(self):
        frame = _random_frame()
        p = _params(c=8.0)
        e, eexp, _ = residuals(frame, p)
        np.testing.assert_allclose(e, frame.ylog - 8.0, atol=1e-12)

    def test_pure_ar1_closed_form(self):
        frame = _random_frame()
        orders = SarmaOrders(p=1, P1=0, P2=0, q=0, Q1=0, Q2=0)
        a1 = 0.55  # printed convention: (1 + a1 L)
        p = _params(orders, c=8.0, ar_short=np.array([a1]))
        e, _, _ = residuals(frame, p)
        ydev = frame.ylog - 8.0
        want = ydev.copy()
        want[1:] += a1 * ydev[:-1]
        np.testing.assert_allclose(e, want, atol=1e-12)

    def test_pure_ma1_recursion(self):
        frame = _random_frame(n=500)
        orders = SarmaOrders(p=0, P1=0, P2=0, q=1, Q1=0, Q2=0)
        m1 = 0.4
        p = _params(orders, c=8.0, ma_short=np.array([m1]))
        e, _, _ = residuals(frame, p)
        ydev = frame.ylog - 8.0
        want = np.zeros_like(ydev)
        for t in range(len(ydev)):
            want[t] = ydev[t] - (m1 * want[t - 1] if t >= 1 else 0.0)
        np.testing.assert_allclose(e, want, atol=1e-10)

    def test_normal_only_calendar_ignores_special_coefs(self, synth3):
        series = synth3.series
        cal = NormalCalendar()
        table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
        frame = build_frame(series, cal, table)
        shared = dict(
            c=10.0,
            ar_short=np.array([-0.4, 0.1]),
            ar_intraday=np.array([-0.2]),
            ar_intraweek=np.array([-0.1]),
            ma_short=np.array([0.2, -0.05]),
            ma_intraday=np.array([0.1]),
            ma_intraweek=np.array([0.05]),
            annual_ar_normal=np.array([-0.5, -0.1, -0.05]),
            annual_ma_normal=np.array([-0.3, -0.1, 0.0]),
        )
        pa = _params(
            **shared,
            annual_ar_special=np.array([9.0, 9.0, 9.0]),
            annual_ma_special=np.array([-9.0, 9.0, -9.0]),
        )
        pb = _params(
            **shared,
            annual_ar_special=shared["annual_ar_normal"].copy(),
            annual_ma_special=shared["annual_ma_normal"].copy(),
        )
        ea, _, _ = residuals(frame, pa)
        eb, _, _ = residuals(frame, pb)
        np.testing.assert_array_equal(ea, eb)

    def test_split_resume_invariance(self, synth3):
        frame = synth3
        p = _params(
            c=float(np.mean(frame.ylog)),
            ar_short=np.array([-0.6, 0.05]),
            ar_intraday=np.array([-0.3]),
            ar_intraweek=np.array([-0.15]),
            ma_short=np.array([0.3, 0.1]),
            ma_intraday=np.array([0.1]),
            ma_intraweek=np.array([0.05]),
            annual_ar_normal=np.array([-0.4, -0.1, -0.02]),
            annual_ma_normal=np.array([-0.2, -0.05, 0.0]),
            annual_ar_special=np.array([-0.5, -0.1, 0.0]),
            annual_ma_special=np.array([-0.25, 0.0, 0.0]),
        )
        e_full, eexp_full, _ = residuals(frame, p)

        mid = frame.n // 2
        e = np.zeros(frame.n)
        eexp = np.zeros(frame.n)
        sub = slice_frame(frame, mid)
        e_head, eexp_head, _ = residuals(sub, p)
        e[:mid] = e_head
        eexp[:mid] = eexp_head
        e2, eexp2, _ = residuals(frame, p, resume_from=mid, e=e, eexp=eexp)
        np.testing.assert_allclose(e2, e_full, atol=1e-12)

        sse_full = float(np.sum(e_full[SEED_PERIODS:] ** 2))
        sse_split = float(np.sum(e2[SEED_PERIODS:] ** 2))
        assert sse_split == pytest.approx(sse_full, rel=1e-14)


class TestForecast:
    def test_all_zero_coefficients_forecast_c(self):
        frame = _random_frame()
        p = _params(c=8.0)
        fitted = sarma.FittedSarma(p, DEFAULT_ORDERS, False, "t")
        out = sarma.forecast(fitted, frame, origin=1500, horizon=10)
        np.testing.assert_allclose(out, 8.0, atol=1e-12)

    def test_ar1_textbook_identity(self):
        frame = _random_frame()
        orders = SarmaOrders(p=1, P1=0, P2=0, q=0, Q1=0, Q2=0)
        conventional_a1 = 0.7
        p = _params(orders, c=8.0, ar_short=np.array([-conventional_a1]))
        fitted = sarma.FittedSarma(p, orders, False, "ar1")
        origin = 1200
        out = sarma.forecast(fitted, frame, origin=origin, horizon=8)
        y_dev = frame.ylog[origin] - 8.0
        want = 8.0 + conventional_a1 ** np.arange(1, 9) * y_dev
        np.testing.assert_allclose(out, want, rtol=1e-12)

    def test_h1_forecast_zeroes_next_residual(self, synth3):
        frame = synth3
        p = _params(
            c=float(np.mean(frame.ylog)),
            ar_short=np.array([-0.5, 0.1]),
            ar_intraday=np.array([-0.2]),
            ar_intraweek=np.array([-0.1]),
            ma_short=np.array([0.25, 0.05]),
            ma_intraday=np.array([0.1]),
            ma_intraweek=np.array([0.02]),
            annual_ar_normal=np.array([-0.4, -0.1, 0.0]),
            annual_ma_normal=np.array([-0.2, 0.0, 0.0]),
            annual_ar_special=np.array([-0.45, 0.0, 0.0]),
            annual_ma_special=np.array([-0.1, 0.0, 0.0]),
        )
        fitted = sarma.FittedSarma(p, DEFAULT_ORDERS, True, "t")
        origin = 2 * YEAR + 777
        f1 = sarma.forecast(fitted, frame, origin=origin, horizon=1)[0]
        # replace the next observation with the forecast: its residual -> 0
        vals = frame.series.values.copy()
        vals[origin + 1] = np.exp(f1)
        series2 = LoadSeries(frame.series.start, vals)
        frame2 = build_frame(series2, frame.cal, frame.table)
        e2, _, _ = residuals(frame2, p)
        assert abs(e2[origin + 1]) < 1e-10

    def test_rolling_matches_single_origin(self, synth3):
        frame = synth3
        p = _params(
            c=float(np.mean(frame.ylog)),
            ar_short=np.array([-0.5]),
            ar_intraday=np.array([-0.2]),
            ar_intraweek=np.array([-0.1]),
            ma_short=np.array([0.2]),
            ma_intraday=np.array([0.0]),
            ma_intraweek=np.array([0.0]),
            annual_ar_normal=np.array([-0.3, 0.0, 0.0]),
            annual_ma_normal=np.array([-0.1, 0.0, 0.0]),
            annual_ar_special=np.array([-0.3, 0.0, 0.0]),
            annual_ma_special=np.array([-0.1, 0.0, 0.0]),
        )
        orders = SarmaOrders(p=1, P1=1, P2=1, q=1, Q1=1, Q2=1)
        fitted = sarma.FittedSarma(p, orders, True, "t")
        first = 2 * YEAR
        preds = fitted.rolling_log_forecasts(frame, first, 6)
        for origin in (first, first + 100):
            single = sarma.forecast(fitted, frame, origin=origin, horizon=6)
            np.testing.assert_allclose(preds[origin - first], single, atol=1e-12)


def _simulate_rb_sarma(frame, params, orders, sigma_n, sigma_s, seed):
    """Invert the residual recursion: draw the errors, solve for y."""
    rng = np.random.default_rng(seed)
    n = frame.n
    e = np.where(
        frame.special.astype(bool),
        rng.normal(0, sigma_s, n),
        rng.normal(0, sigma_n, n),
    )
    la, lb, lc = annual_lag_arrays(frame)
    ar_lags, ar_coefs = sarma.static_ar_expansion(params)
    ma_lags, ma_coefs = sarma.static_ma_expansion(params)
    ydev = np.zeros(n)
    yexp = np.zeros(n)
    eexp = np.zeros(n)
    for t in range(n):
        if frame.special[t]:
            aa, mm = params.annual_ar_special, params.annual_ma_special
        else:
            aa, mm = params.annual_ar_normal, params.annual_ma_normal
        ann_ar = 0.0
        ann_ma = 0.0
        for coef_a, coef_m, lag in zip(aa, mm, (la[t], lb[t], lc[t])):
            if lag > 0 and t - lag >= 0:
                ann_ar += coef_a * ydev[t - lag]
                ann_ma += coef_m * e[t - lag]
        ar_acc = 0.0
        for lag, c in zip(ar_lags, ar_coefs):
            if t - lag >= 0:
                ar_acc += c * yexp[t - lag]
        ma_acc = 0.0
        for lag, c in zip(ma_lags, ma_coefs):
            if t - lag >= 0:
                ma_acc += c * eexp[t - lag]
        # residual identity: e = ydev + ann_ar + ar_acc - ma_acc - ann_ma
        ydev[t] = e[t] - ann_ar - ar_acc + ma_acc + ann_ma
        yexp[t] = ydev[t] + ann_ar
        eexp[t] = e[t] + ann_ma
    return ydev + params.c, e


class TestFit:
    def test_simulate_and_recover(self):
        cal = Calendar()
        start = date(2001, 1, 1)
        end = date(2003, 6, 30)
        n = ((end - start).days + 1) * 48
        placeholder = LoadSeries(PeriodStamp(start, 1), np.full(n, 100.0))
        table = build_table(start, end, RuleId.R1, cal)
        frame0 = build_frame(placeholder, cal, table)
        orders = SarmaOrders(p=1, P1=0, P2=0, q=0, Q1=0, Q2=0)
        truth = _params(
            orders,
            c=8.0,
            ar_short=np.array([-0.65]),
            annual_ar_normal=np.array([-0.55, 0.0, 0.0]),
            annual_ar_special=np.array([-0.35, 0.0, 0.0]),
            annual_ma_normal=np.array([-0.25, 0.0, 0.0]),
            annual_ma_special=np.array([-0.15, 0.0, 0.0]),
        )
        ylog, e_true = _simulate_rb_sarma(frame0, truth, orders, 0.02, 0.03, seed=42)
        series = LoadSeries(PeriodStamp(start, 1), np.exp(ylog))
        frame = build_frame(series, cal, table)

        # round-trip: the recursion must reproduce the drawn errors
        e_back, _, _ = residuals(frame, truth)
        np.testing.assert_allclose(e_back, e_true, atol=1e-10)

        fitted = sarma.fit(
            frame,
            orders,
            rule_based=True,
            options=MinimizeOptions(max_evals=2500, restarts=1),
        )
        assert abs(fitted.params.c - truth.c) < 0.1
        assert abs(fitted.params.ar_short[0] - truth.ar_short[0]) < 0.1
        assert abs(
            fitted.params.annual_ar_normal[0] - truth.annual_ar_normal[0]
        ) < 0.1

    def test_white_noise_shrinks_coefficients(self):
        frame = _random_frame(n=20000, seed=9)
        orders = SarmaOrders(p=1, P1=0, P2=0, q=1, Q1=0, Q2=0)
        fitted = sarma.fit(
            frame,
            orders,
            rule_based=False,
            options=MinimizeOptions(max_evals=1500, restarts=1),
        )
        assert abs(fitted.params.ar_short[0]) < 0.05
        assert abs(fitted.params.ma_short[0]) < 0.05

    def test_refit_from_optimum_is_fixed_point(self):
        frame = _random_frame(n=19000, seed=3)
        orders = SarmaOrders(p=1, P1=0, P2=0, q=0, Q1=0, Q2=0)
        f1 = sarma.fit(frame, orders, rule_based=False,
                       options=MinimizeOptions(max_evals=1500, restarts=1))
        f2 = sarma.fit(frame, orders, rule_based=False, start=f1.params,
                       options=MinimizeOptions(max_evals=1500, restarts=1))
        assert f2.fit.nll <= f1.fit.nll + 1e-8


class TestOrderSelection:
    def test_grid_of_one(self):
        frame = _random_frame(n=18500, seed=1)
        orders = SarmaOrders(p=1, P1=0, P2=0, q=0, Q1=0, Q2=0)
        chosen, fitted = sarma.select_orders(
            frame, [orders], rule_based=False,
            options=MinimizeOptions(max_evals=400, restarts=1),
        )
        assert chosen == orders

    def test_ar1_beats_ar2_on_ar1_data(self):
        # AR(1) data; AIC should prefer the smaller model most of the time
        wins = 0
        reps = 10
        for seed in range(reps):
            rng = np.random.default_rng(100 + seed)
            n = 18500
            eps = rng.normal(0, 0.05, n)
            y = np.zeros(n)
            for t in range(1, n):
                y[t] = 0.6 * y[t - 1] + eps[t]
            series = LoadSeries(
                PeriodStamp(date(2001, 1, 1), 1), np.exp(8.0 + y)
            )
            cal = NormalCalendar()
            table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
            frame = build_frame(series, cal, table)
            g1 = SarmaOrders(p=1, P1=0, P2=0, q=0, Q1=0, Q2=0)
            g2 = SarmaOrders(p=2, P1=0, P2=0, q=0, Q1=0, Q2=0)
            chosen, _ = sarma.select_orders(
                frame, [g1, g2], rule_based=False,
                options=MinimizeOptions(max_evals=500, restarts=1),
            )
            if chosen == g1:
                wins += 1
        assert wins >= 9, f"AR(1) selected only {wins}/{reps} times"
