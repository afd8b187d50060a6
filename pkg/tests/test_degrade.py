import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import T0, timestamps
from tribokit.core import MetaParameters
from tribokit.degrade import (
    FeatureSeries,
    goodness_metrics,
    goodness_score,
    min_max_scaled,
    resample_uniform,
    select_degradation_feature,
    smooth_feature,
)
from tribokit.errors import ConfigurationError, InvalidInputError, SelectionError


def series(values, times=None, fid=1):
    values = np.asarray(values, dtype=float)
    times = np.arange(values.size, dtype=float) if times is None else times
    return FeatureSeries(fid, times, values, start=T0)


# -- smoothing ------------------------------------------------------------------------


@pytest.mark.parametrize("window", [1, 2, 5, 20])
def test_constant_unchanged(window):
    s = smooth_feature(series(np.full(40, 2.5)), window)
    np.testing.assert_allclose(s.values, 2.5, rtol=1e-14)


def test_window_one_is_identity():
    x = np.random.default_rng(0).normal(size=30)
    np.testing.assert_array_equal(smooth_feature(series(x), 1).values, x)


@pytest.mark.parametrize("window", [3, 4, 20, 21])
def test_line_is_unchanged(window):
    x = 0.3 * np.arange(50) - 2
    np.testing.assert_allclose(smooth_feature(series(x), window).values, x, atol=1e-12)


def test_even_window_weights_against_direct_convolution():
    x = np.random.default_rng(1).normal(size=40)
    w = np.r_[0.5, np.ones(3), 0.5] / 4  # 2x4 centred moving average
    direct = np.convolve(x, w, mode="valid")
    np.testing.assert_allclose(smooth_feature(series(x), 4).values[2:-2], direct, rtol=1e-12)


def test_edges_shrink_symmetrically():
    x = np.arange(10.0) ** 2
    s = smooth_feature(series(x), 5).values
    assert s[0] == x[0]
    assert s[1] == pytest.approx(np.mean(x[0:3]))
    assert s[-2] == pytest.approx(np.mean(x[-3:]))


def test_smoothing_errors():
    with pytest.raises(ConfigurationError):
        smooth_feature(series(np.ones(5)), 6)
    with pytest.raises(ConfigurationError):
        smooth_feature(series(np.ones(5)), 0)


# -- resampling -----------------------------------------------------------------------


def test_uniform_series_unchanged():
    s = series(np.sin(np.arange(20)), times=np.arange(20) / 6)
    r = resample_uniform(s, 1 / 6)
    np.testing.assert_allclose(r.values, s.values, atol=1e-12)
    np.testing.assert_allclose(r.times, s.times, atol=1e-12)


def test_two_point_interpolation():
    r = resample_uniform(series([0.0, 10.0], times=np.array([0.0, 10.0])), 5.0)
    np.testing.assert_allclose(r.values, [0, 5, 10])
    np.testing.assert_allclose(r.times, [0, 5, 10])


def test_irregular_cadence_grid():
    # IMS-like cadence: mostly 10 min with a few longer gaps, in hours
    ts = timestamps(100)
    ts = ts[:40] + [t + (ts[1] - ts[0]) * 3 for t in ts[40:]]
    hours = np.array([(t - ts[0]).total_seconds() / 3600 for t in ts])
    r = resample_uniform(series(np.log1p(hours), times=hours), 10 / 60)
    assert len(r) == int(round(hours[-1] * 6)) + 1
    assert np.all(np.diff(r.times) > 0)
    np.testing.assert_allclose(np.diff(r.times), 10 / 60, rtol=1e-9)
    assert r.times[-1] <= hours[-1] + 1e-9


def test_resample_errors():
    with pytest.raises(InvalidInputError):
        resample_uniform(series([1.0]), 1.0)
    with pytest.raises(ConfigurationError):
        resample_uniform(series([1.0, 2.0]), 0.0)


def test_series_validation():
    with pytest.raises(InvalidInputError):
        FeatureSeries(1, [0, 1, 1], [1, 2, 3])
    with pytest.raises(InvalidInputError):
        FeatureSeries(1, [0, 1], [1, 2, 3])


# -- metrics --------------------------------------------------------------------------


def test_noiseless_exponential():
    t = np.linspace(0, 50, 300)
    corr, mon, rob = goodness_metrics(series(np.exp(0.03 * t), times=t), window=1)
    assert mon == 1.0 and rob == 1.0
    assert corr >= 0.85


def test_trend_equal_to_time():
    t = np.arange(30.0)
    assert goodness_metrics(series(t, times=t), 5)[0] == pytest.approx(1.0)


def test_alternating_series_not_monotone():
    x = np.array([1.0, -1.0] * 10 + [1.0])  # K = 21, ten rises, ten falls
    assert goodness_metrics(series(x), 1)[1] == 0.0


def test_flat_trend_has_zero_correlation():
    assert goodness_metrics(series(np.ones(10)), 3)[0] == 0.0


def test_robustness_against_direct_formula():
    x = np.random.default_rng(3).normal(5, 1, 60)
    s = series(x)
    trend = smooth_feature(s, 7).values
    expected = np.mean(np.exp(-np.abs(x - trend) / (np.abs(x) + 1e-12)))
    assert goodness_metrics(s, 7)[2] == pytest.approx(expected, rel=1e-12)


def test_metrics_need_three_points():
    with pytest.raises(InvalidInputError):
        goodness_metrics(series([1.0, 2.0]), 1)


@settings(max_examples=100, deadline=None)
@given(
    # values on a 0.01 grid so a*x + b cannot absorb distinct values
    st.lists(st.integers(-100_000, 100_000).map(lambda v: v / 100), min_size=5, max_size=80),
    st.floats(1e-2, 1e2),
    st.floats(-1e2, 1e2),
    st.integers(1, 5),
)
def test_metric_ranges_and_affine_invariance(values, a, b, window):
    x = np.array(values)
    s = series(x)
    corr, mon, rob = goodness_metrics(s, window)
    k = len(x)
    assert 0 <= corr <= 1 and 0 <= mon <= 1 and 0 < rob <= 1
    assert mon * (k - 1) == pytest.approx(round(mon * (k - 1)))
    corr2, mon2, _ = goodness_metrics(series(a * x + b), window)
    assert corr2 == pytest.approx(corr, abs=1e-6)
    assert mon2 == mon


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.integers(0, 2), st.floats(0, 1))
def test_score_monotone_in_each_metric(metrics, which, bump):
    w = MetaParameters(deg_param_weights=(1, 2, 3)).deg_param_weights
    better = list(metrics)
    better[which] = min(1.0, better[which] + bump)
    assert goodness_score(better, w) >= goodness_score(metrics, w) - 1e-15
    assert 0 <= goodness_score(metrics, w) <= 1 + 1e-12


def test_score_examples():
    assert goodness_score((1, 1, 1), (0.2, 0.3, 0.5)) == pytest.approx(1.0)
    assert goodness_score((0.3, 0.9, 0.9), (1, 0, 0)) == pytest.approx(0.3)


# -- selection ------------------------------------------------------------------------


def candidates(seed=0, n=200):
    t = np.arange(n) / 6
    rng = np.random.default_rng(seed)
    return [
        FeatureSeries(1, t, 1 + rng.normal(0, 0.2, n), start=T0),
        FeatureSeries(2, t, np.exp(0.02 * t), start=T0),
    ]


def test_exponential_beats_noise():
    report = select_degradation_feature(candidates())
    assert report.selected_feature_id == 2
    assert report.scores[2] > report.scores[1]
    corr, mon, _ = report.metrics[1]
    assert corr < 0.5 and mon < 0.5


def test_single_candidate_selected():
    assert select_degradation_feature(candidates()[:1]).selected_feature_id == 1


def test_order_invariance_and_tie_break():
    a, b = candidates()
    assert select_degradation_feature([a, b]).scores == select_degradation_feature([b, a]).scores
    twin = FeatureSeries(7, b.times, b.values, start=T0)
    assert select_degradation_feature([twin, b]).selected_feature_id == 2


def test_degenerate_candidates():
    short = FeatureSeries(3, [0.0, 1 / 6], [1.0, 2.0])
    report = select_degradation_feature([short, *candidates()])
    assert 3 in report.excluded and 3 not in report.scores
    with pytest.raises(SelectionError):
        select_degradation_feature([short])
    with pytest.raises(SelectionError):
        select_degradation_feature([])


def test_report_table_layout():
    report = select_degradation_feature(candidates())
    lines = report.to_table().splitlines()
    assert lines[0] == "metric,1,2"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["corr", "mon", "rob", "J", "selected"]
    assert lines[-1] == "selected,2"


def test_min_max_scaling():
    s = min_max_scaled(series([2.0, 4.0, 3.0]))
    np.testing.assert_allclose(s.values, [0, 1, 0.5])
    assert np.all(min_max_scaled(series([2.0, 2.0, 2.0])).values == 0)
