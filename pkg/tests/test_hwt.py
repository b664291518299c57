from datetime import date

import numpy as np
import pytest

from loadcast import hwt
from loadcast.errors import InsufficientHistory, MissingAnnualIndex
from loadcast.estimate import MinimizeOptions
from loadcast.framing import build_frame, slice_frame
from loadcast.gbcal import NormalCalendar
from loadcast.hwt import SEED_PERIODS, HwtParams, filter_series, filter_step, init_state
from loadcast.rules import RuleId, build_table
from loadcast.series import LoadSeries, PeriodStamp
from loadcast.synth import SynthConfig, generate

YEAR = 365 * 48


def plain_hwt_reference(y, pod, pow_, lag, level, d, w, a_seed, lam, delta, omega, alpha, phi, n_seed):
    """Independent implementation of the original (non-rule) recursion:
    one smoothing rate for the intrayear index, no gating."""
    a = list(a_seed)
    d = list(d)
    w = list(w)
    preds = []
    e_prev = 0.0
    for t in range(n_seed, len(y)):
        a_ref = a[t - lag[t]]
        base = level + d[pod[t]] + w[pow_[t]] + a_ref
        preds.append(base + phi * e_prev)
        e = y[t] - base
        level = level + lam * e
        d[pod[t]] = d[pod[t]] + delta * e
        w[pow_[t]] = w[pow_[t]] + omega * e
        a.append(a_ref + alpha * e)
        e_prev = e
    return np.array(preds)


def _constant_frame(n=2 * YEAR + 500, value=5000.0):
    series = LoadSeries(PeriodStamp(date(2001, 1, 1), 1), np.full(n, value))
    cal = NormalCalendar()
    table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
    return build_frame(series, cal, table)


def test_init_constant_series():
    frame = _constant_frame()
    st = init_state(frame)
    assert st.level == pytest.approx(np.log(5000.0))
    assert np.max(np.abs(st.intraday)) < 1e-12
    assert np.max(np.abs(st.intraweek)) < 1e-12
    assert np.max(np.abs(st.intrayear)) < 1e-12
    assert st.last_error == 0.0


def test_init_pure_intraday_has_no_weekly_index():
    n = 2 * YEAR + 500
    pod = np.arange(n) % 48
    pat = 0.4 * np.sin(2 * np.pi * np.arange(48) / 48)
    pat -= pat.mean()
    series = LoadSeries(PeriodStamp(date(2001, 1, 1), 1), np.exp(8.0 + pat[pod]))
    cal = NormalCalendar()
    table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
    frame = build_frame(series, cal, table)
    st = init_state(frame)
    assert np.max(np.abs(st.intraweek)) < 1e-6
    np.testing.assert_allclose(st.intraday[pod[:48]], pat, atol=1e-9)


def test_init_requires_two_years():
    with pytest.raises(InsufficientHistory):
        init_state(_constant_frame(n=YEAR + 100))


def test_init_first_year_special_seed_negative():
    cfg = SynthConfig(years=3, seed=5, noise_sd=0.0, annual_amp=0.0, drift_per_year=0.0)
    series, labels = generate(cfg)
    from loadcast.gbcal import Calendar

    cal = Calendar()
    table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
    frame = build_frame(series, cal, table)
    st = init_state(frame)
    xmas = frame.series.offset_of(PeriodStamp(date(2001, 12, 25), 20))
    assert st.intrayear[xmas] < -0.1


def test_constant_series_is_fixed_point():
    frame = _constant_frame()
    st = init_state(frame)
    params = HwtParams(0.3, 0.2, 0.1, 0.2, 0.4, 0.5)
    eps, end = filter_series(frame, params, st)
    assert np.max(np.abs(eps)) < 1e-12
    assert end.level == pytest.approx(st.level)
    assert np.max(np.abs(end.intrayear)) < 1e-12


def test_zero_smoothing_leaves_state_fixed():
    frame = _constant_frame()
    st = init_state(frame)
    base_level = st.level
    params = HwtParams(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    eps, end = filter_series(frame, params, st)
    assert end.level == base_level
    np.testing.assert_array_equal(end.intraday, st.intraday)


def test_rb_collapses_to_plain_reference(synth3):
    """On an all-normal calendar the RB kernel must reproduce the plain
    Eqs (1)-(6) recursion bit-for-bit (<=1e-12 relative)."""
    # reuse the synthetic values but strip the calendar
    series = synth3.series
    cal = NormalCalendar()
    table = build_table(series.start.date, series.end.date, RuleId.R1, cal)
    frame = build_frame(series, cal, table)
    st = init_state(frame)
    params = HwtParams(lam=0.2, delta=0.15, omega=0.1, alpha1=0.08, alpha2=0.9, phi=0.4)
    eps, _ = filter_series(frame, params, st)
    kernel_preds = frame.ylog[SEED_PERIODS:] - eps
    ref_preds = plain_hwt_reference(
        frame.ylog,
        frame.pod,
        frame.pow_,
        frame.lag,
        st.level,
        st.intraday,
        st.intraweek,
        st.intrayear,
        params.lam,
        params.delta,
        params.omega,
        params.alpha1,  # plain alpha
        params.phi,
        SEED_PERIODS,
    )
    np.testing.assert_allclose(kernel_preds, ref_preds, rtol=1e-12, atol=1e-12)


def test_filter_step_matches_kernel(synth3):
    frame = synth3
    st = init_state(frame)
    params = HwtParams(0.15, 0.1, 0.05, 0.05, 0.3, 0.2)
    eps, _ = filter_series(frame, params, st)
    st2 = init_state(frame)
    for t in range(SEED_PERIODS, SEED_PERIODS + 400):
        st2, e, pred = filter_step(
            st2,
            params,
            frame.ylog[t],
            int(frame.pod[t]),
            int(frame.pow_[t]),
            bool(frame.special[t]),
            int(frame.lag[t]),
        )
        assert frame.ylog[t] - pred == pytest.approx(eps[t - SEED_PERIODS], abs=1e-12)


def test_residual_identity_recomputed(synth3):
    """Recompute e_t = y - (l + d + w + a) from the state before each step."""
    frame = synth3
    st = init_state(frame)
    params = HwtParams(0.15, 0.1, 0.05, 0.05, 0.3, 0.2)
    for t in range(SEED_PERIODS, SEED_PERIODS + 200):
        level_before = st.level
        d_before = st.intraday[frame.pod[t]]
        w_before = st.intraweek[frame.pow_[t]]
        a_before = st.intrayear[t - frame.lag[t]]
        st, e, _ = filter_step(
            st,
            params,
            frame.ylog[t],
            int(frame.pod[t]),
            int(frame.pow_[t]),
            bool(frame.special[t]),
            int(frame.lag[t]),
        )
        want = frame.ylog[t] - (level_before + d_before + w_before + a_before)
        assert e == pytest.approx(want, abs=1e-14)


def test_special_day_freezes_d_and_w(synth3):
    frame = synth3
    st = init_state(frame)
    params = HwtParams(0.2, 0.5, 0.5, 0.1, 0.1, 0.0)
    t = int(np.nonzero(frame.special[SEED_PERIODS:])[0][0]) + SEED_PERIODS
    # advance to t
    for u in range(SEED_PERIODS, t):
        st, _, _ = filter_step(
            st, params, frame.ylog[u], int(frame.pod[u]), int(frame.pow_[u]),
            bool(frame.special[u]), int(frame.lag[u]),
        )
    d_before = st.intraday.copy()
    w_before = st.intraweek.copy()
    st, e, _ = filter_step(
        st, params, frame.ylog[t], int(frame.pod[t]), int(frame.pow_[t]),
        True, int(frame.lag[t]),
    )
    np.testing.assert_array_equal(st.intraday, d_before)
    np.testing.assert_array_equal(st.intraweek, w_before)
    # intrayear did move at rate alpha2
    assert st.intrayear[t] == pytest.approx(st.intrayear[t - frame.lag[t]] + params.alpha2 * e)


def test_noiseless_forecasts_exact(flat_frame):
    frame = flat_frame
    st = init_state(frame)
    params = HwtParams(0.3, 0.2, 0.1, 0.1, 0.1, 0.5)
    eps, end = filter_series(frame, params, st)
    assert np.max(np.abs(eps)) < 1e-10
    sub = slice_frame(frame, frame.n - 48)
    st2 = init_state(sub)
    _, end2 = filter_series(sub, params, st2)
    preds = hwt.forecast(end2, params, frame, 48)
    np.testing.assert_allclose(preds, frame.ylog[frame.n - 48 :], atol=1e-10)


def test_phi_contribution_is_geometric(synth3):
    frame = synth3
    n_cut = frame.n - 48
    sub = slice_frame(frame, n_cut)
    st = init_state(sub)
    p1 = HwtParams(0.2, 0.1, 0.05, 0.05, 0.2, 0.6)
    p0 = HwtParams(0.2, 0.1, 0.05, 0.05, 0.2, 0.0)
    _, end1 = filter_series(sub, p1, st.clone())
    f1 = hwt.forecast(end1, p1, frame, 48)
    # phi=0 forecasts from the same filtered state
    f0 = hwt.forecast(end1, p0, frame, 48)
    h = np.arange(1, 49)
    np.testing.assert_allclose(f1 - f0, 0.6**h * end1.last_error, rtol=1e-10, atol=1e-12)


def test_h1_forecast_equals_next_one_step_pred(synth3):
    frame = synth3
    cut = 2 * YEAR + 1000
    sub = slice_frame(frame, cut)
    params = HwtParams(0.2, 0.1, 0.05, 0.05, 0.2, 0.4)
    st = init_state(sub)
    _, end = filter_series(sub, params, st)
    f = hwt.forecast(end, params, frame, 1)
    # now observe y[cut] via a single step and compare its pred
    st2, e, pred = filter_step(
        end, params, frame.ylog[cut], int(frame.pod[cut]), int(frame.pow_[cut]),
        bool(frame.special[cut]), int(frame.lag[cut]),
    )
    assert f[0] == pytest.approx(pred, abs=1e-12)


def test_missing_annual_index_raises():
    frame = _constant_frame()
    st = init_state(frame)
    with pytest.raises(MissingAnnualIndex):
        filter_step(st, HwtParams(0.1, 0.1, 0.1, 0.1, 0.1, 0.1), 8.0, 0, 0, False, 10**7)


def test_fit_recovers_sensible_params_and_rolls(synth3):
    frame = synth3
    n_est = 2 * YEAR
    fitted = hwt.fit(
        slice_frame(frame, n_est), options=MinimizeOptions(max_evals=300, restarts=1)
    )
    assert 0.0 <= fitted.params.lam <= 1.0
    assert fitted.params.sigma_n2 > 0
    preds = fitted.rolling_log_forecasts(frame, n_est - 1, 48)
    assert preds.shape == ((frame.n - 1 - 48) - (n_est - 1) + 1, 48)
    assert np.isfinite(preds).all()
    # one-step predictions must track the series closely
    actual = frame.ylog[n_est : n_est + preds.shape[0]]
    assert np.mean(np.abs(preds[:, 0] - actual)) < 0.05
