import math

from tentlablib.decisions import Bounded, Trend, grows_by, refinement_decision, spread_of, trend_decision


def test_refinement_decision_settled_trace_is_finite():
    assert refinement_decision([1.0, 1.5, 1.6, 1.62]) is Bounded.FINITE


def test_refinement_decision_zero_trace_is_finite():
    assert refinement_decision([0.0, 0.0, 0.0]) is Bounded.FINITE


def test_refinement_decision_monotone_growth_is_infinite():
    assert refinement_decision([1.0, 4.0, 30.0]) is Bounded.INFINITE
    assert refinement_decision([1.0, 12.0]) is Bounded.INFINITE


def test_refinement_decision_infinite_value():
    assert refinement_decision([1.0, math.inf]) is Bounded.INFINITE


def test_refinement_decision_inconclusive():
    assert refinement_decision([]) is Bounded.INCONCLUSIVE
    assert refinement_decision([1.0, math.nan, 2.0]) is Bounded.INCONCLUSIVE
    assert refinement_decision([1.0, 1.1]) is Bounded.INCONCLUSIVE
    # last step still triples without ten-fold growth overall
    assert refinement_decision([3.0, 1.0, 3.0]) is Bounded.INCONCLUSIVE


def test_trend_decision():
    assert trend_decision([1.0, 0.4, 0.1]) is Trend.DECREASING
    assert trend_decision([1.0, 0.0, 0.0]) is Trend.DECREASING
    assert trend_decision([1.0, 3.0, 7.0]) is Trend.GROWING
    assert trend_decision([1.0, 0.9, 1.1]) is Trend.FLAT
    assert trend_decision([5.0]) is Trend.FLAT


def test_spread_of():
    assert spread_of([2.0, 4.0, 3.0]) == 2.0
    assert spread_of([1.0, 0.0]) == math.inf
    assert spread_of([]) == math.inf
    assert spread_of([1.0, math.inf]) == math.inf


def test_grows_by():
    assert grows_by([1.0, 3.0, 12.0])
    assert not grows_by([1.0, 30.0, 12.0])
    assert not grows_by([1.0, 2.0, 5.0])
    assert grows_by([1.0, 2.0, 5.0], factor=5.0)
    assert not grows_by([1.0])
