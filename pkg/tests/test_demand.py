"""Demand classification, pooling, Croston/SBA fixpoints, two-fold, SPEC."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbench.forecasting import (
    DemandSeries,
    SpecParams,
    TwofoldForecaster,
    classify_demand,
    forecast_croston,
    forecast_sba,
    pool_by_magnitude,
    spec_metric,
)


def series(quantities, pid="p1"):
    return DemandSeries(pid, periods=list(range(len(quantities))), quantities=quantities)


class TestClassification:
    def test_constant_every_period_is_smooth(self):
        dc = classify_demand(series([5.0] * 12))
        assert dc.adi == pytest.approx(1.0)
        assert dc.cv2 == pytest.approx(0.0)
        assert dc.category == "smooth"

    def test_regular_spikes_are_intermittent(self):
        dc = classify_demand(series([0, 0, 6, 0, 0, 6, 0, 0, 6]))
        assert dc.adi == pytest.approx(3.0)
        assert dc.cv2 == pytest.approx(0.0)
        assert dc.category == "intermittent"

    def test_all_zero_series_is_degenerate(self):
        dc = classify_demand(series([0.0] * 8))
        assert dc.category == "intermittent-degenerate"

    def test_erratic_and_lumpy_quadrants(self):
        # frequent but wildly sized -> erratic; sparse and wildly sized -> lumpy
        erratic = classify_demand(series([1, 30, 1, 30, 1, 30, 1, 30]))
        assert erratic.category == "erratic"
        lumpy = classify_demand(series([0, 0, 1, 0, 0, 30, 0, 0, 1, 0, 0, 30]))
        assert lumpy.category == "lumpy"


class TestPooling:
    def test_quantile_split_by_mean_size(self):
        sets = [
            series([1.0] * 4, "small"),
            series([10.0] * 4, "mid"),
            series([100.0] * 4, "big"),
            series([1000.0] * 4, "huge"),
        ]
        pools = pool_by_magnitude(sets, 2)
        assert pools["small"] == pools["mid"]
        assert pools["big"] == pools["huge"]
        assert pools["small"] != pools["big"]

    def test_all_zero_series_excluded(self):
        sets = [series([0.0] * 4, "dead"), series([5.0] * 4, "live")]
        pools = pool_by_magnitude(sets, 1)
        assert "dead" not in pools
        assert "live" in pools


class TestCroston:
    def test_constant_demand_is_a_fixpoint(self):
        fc = forecast_croston(series([5.0] * 10), alpha=0.3)
        assert fc.next_forecast == pytest.approx(5.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.05, 0.1, 0.5, 0.9])
    def test_size_six_every_third_period(self, alpha):
        fc = forecast_croston(series([0, 0, 6, 0, 0, 6, 0, 0, 6]), alpha=alpha)
        assert fc.next_forecast == pytest.approx(2.0, abs=1e-12)

    def test_sba_scales_by_one_minus_half_alpha(self):
        fc = forecast_sba(series([0, 0, 6, 0, 0, 6, 0, 0, 6]), alpha=0.1)
        assert fc.next_forecast == pytest.approx(1.9, abs=1e-12)

    def test_all_zero_history_rejected(self):
        with pytest.raises(ValueError, match="no demand"):
            forecast_croston(series([0.0] * 6))

    def test_alpha_bounds(self):
        with pytest.raises(ValueError):
            forecast_croston(series([1.0, 2.0]), alpha=1.0)

    @settings(deadline=None, max_examples=30)
    @given(
        st.integers(0, 10_000),
        st.integers(1, 6),
        st.floats(0.05, 0.9),
    )
    def test_leading_zeros_do_not_change_forecast(self, seed, n_zeros, alpha):
        rng = np.random.default_rng(seed)
        qs = []
        for _ in range(12):
            qs.extend([0.0] * int(rng.integers(0, 3)))
            qs.append(float(rng.integers(1, 20)))
        base = forecast_croston(series(qs), alpha=alpha)
        padded = forecast_croston(series([0.0] * n_zeros + qs), alpha=alpha)
        assert padded.next_forecast == pytest.approx(base.next_forecast, abs=1e-12)


class TestTwofold:
    def test_always_demanded_history_predicts_occurrence(self):
        s = series([4.0] * 30)
        model = TwofoldForecaster(lags=4, seed=0).fit(s)
        p_occ, size, point = model.predict_next()
        assert p_occ >= 0.9
        assert size == pytest.approx(4.0)
        assert point == pytest.approx(p_occ * size)

    def test_alternating_pattern_is_lag1_separable(self):
        q = [0.0, 6.0] * 30
        s = series(q)
        model = TwofoldForecaster(lags=2, seed=1).fit(s)
        full = np.asarray(q + [0.0, 6.0] * 5)
        correct = 0
        for t in range(len(q), len(full)):
            p = model.occurrence_probability(full, t)
            predicted = p >= 0.5
            actually = full[t] > 0
            correct += predicted == actually
        assert correct == 10

    def test_zero_occurrence_gives_zero_point_forecast(self):
        s = series([0.0] * 10 + [1.0] + [0.0] * 10)
        model = TwofoldForecaster(lags=3, seed=0).fit(s)
        p_occ, size, point = model.predict_next()
        assert point == pytest.approx(p_occ * size)

    def test_short_history_rejected(self):
        with pytest.raises(ValueError, match="insufficient"):
            TwofoldForecaster(lags=8).fit(series([1.0] * 5))


def spec_literal(actual, forecast, a1, a2):
    """Oracle: the metric written as literal nested loops and running sums."""
    n = len(actual)
    total = 0.0
    for t in range(1, n + 1):
        cum_y = sum(actual[:t])
        cum_f = sum(forecast[:t])
        for i in range(1, t + 1):
            term = max(
                0.0,
                a1 * min(actual[i - 1], cum_y - cum_f),
                a2 * min(forecast[i - 1], cum_f - cum_y),
            )
            total += term * (t - i + 1)
    return total / n


class TestSpecMetric:
    def test_exact_forecast_costs_nothing(self):
        y = [3.0, 0.0, 2.0, 5.0]
        assert spec_metric(y, y) == pytest.approx(0.0)

    def test_all_zero_costs_nothing(self):
        assert spec_metric([0.0, 0.0], [0.0, 0.0]) == pytest.approx(0.0)

    def test_hand_case_against_literal_oracle(self):
        y = [3.0, 0.0]
        f = [0.0, 3.0]
        expected = spec_literal(y, f, 0.5, 0.5)
        assert spec_metric(y, f, SpecParams(0.5, 0.5)) == pytest.approx(expected, abs=1e-12)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            spec_metric([1.0, -1.0], [0.0, 0.0])

    @settings(deadline=None, max_examples=40)
    @given(st.integers(0, 10_000))
    def test_random_series_match_literal_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 15))
        y = rng.integers(0, 10, size=n).astype(float)
        f = rng.integers(0, 10, size=n).astype(float)
        a1, a2 = float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2))
        got = spec_metric(y, f, SpecParams(a1, a2))
        assert got == pytest.approx(spec_literal(list(y), list(f), a1, a2), rel=1e-9, abs=1e-9)

    @settings(deadline=None, max_examples=40)
    @given(
        st.lists(st.floats(0, 50, allow_nan=False), min_size=1, max_size=12),
        st.floats(0.01, 3.0),
        st.floats(0.01, 3.0),
    )
    def test_cost_is_nonnegative_and_zero_on_exact_forecast(self, y, a1, a2):
        f = list(np.random.default_rng(0).uniform(0, 50, size=len(y)))
        assert spec_metric(y, f, SpecParams(a1, a2)) >= 0.0
        assert spec_metric(y, list(y), SpecParams(a1, a2)) == pytest.approx(0.0, abs=1e-9)


def test_series_invariants():
    with pytest.raises(ValueError):
        DemandSeries("p", periods=[0, 1], quantities=[1.0])
    with pytest.raises(ValueError):
        DemandSeries("p", periods=[1, 0], quantities=[1.0, 1.0])
    with pytest.raises(ValueError):
        DemandSeries("p", periods=[0, 1], quantities=[1.0, -1.0])
