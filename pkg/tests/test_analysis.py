import math
import random

import pytest
from hypothesis import given, strategies as st

from chartforge import analysis, codegen, recommend
from chartforge.errors import EmptySeries, LengthMismatch, SingletonSeries
from conftest import make_clean


# --- independent brute-force oracle (literal definitions, no shortcuts) -------

def oracle_stats(series):
    n = len(series)
    mean = sum(series) / n
    ordered = sorted(series)
    if n % 2 == 1:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2
    if n == 1:
        stddev = 0.0
    else:
        stddev = (sum((v - mean) ** 2 for v in series) / (n - 1)) ** 0.5
    return {
        "mean": mean, "median": median, "stddev": stddev,
        "minimum": min(series), "maximum": max(series),
        "range": max(series) - min(series), "sum": sum(series),
    }


def oracle_trend(series):
    n = len(series)
    lo, hi = min(series), max(series)
    if hi == lo:
        return "stable"
    xs = list(range(n))
    x_mean = sum(xs) / n
    y_mean = sum(series) / n
    slope = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, series)) \
        / sum((x - x_mean) ** 2 for x in xs)
    drift = slope * (n - 1) / (hi - lo)
    if drift > 0.1:
        return "increasing"
    if drift < -0.1:
        return "decreasing"
    return "stable"


def oracle_quartile(values, q):
    ordered = sorted(values)
    pos = (len(ordered) - 1) * q
    lo = int(pos)
    frac = pos - lo
    if lo + 1 < len(ordered):
        return ordered[lo] * (1 - frac) + ordered[lo + 1] * frac
    return ordered[lo]


def oracle_outliers(series):
    if len(series) < 4:
        return []
    q1 = oracle_quartile(series, 0.25)
    q3 = oracle_quartile(series, 0.75)
    iqr = q3 - q1
    return [i for i, v in enumerate(series)
            if v < q1 - 1.5 * iqr or v > q3 + 1.5 * iqr]


# --- compute_stats -----------------------------------------------------------

def test_stats_hand_case():
    stats = analysis.compute_stats([1, 2, 3])
    assert stats.mean == 2
    assert stats.median == 2
    assert stats.stddev == pytest.approx(1.0, abs=1e-12)
    assert stats.sum == 6
    assert stats.range == 2


def test_stats_singleton():
    stats = analysis.compute_stats([7])
    assert stats.mean == 7
    assert stats.stddev == 0
    assert stats.range == 0


def test_stats_constant_series():
    assert analysis.compute_stats([5, 5, 5, 5]).stddev == 0


def test_stats_even_length_median_is_midpoint():
    assert analysis.compute_stats([1, 2, 3, 10]).median == 2.5


def test_stats_empty_series():
    with pytest.raises(EmptySeries):
        analysis.compute_stats([])


def test_stats_match_oracle_on_random_series():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(1, 50)
        series = [rng.uniform(-1000, 1000) for _ in range(n)]
        stats = analysis.compute_stats(series)
        expected = oracle_stats(series)
        for kind in analysis.SCALAR_KINDS:
            assert stats.by_kind(kind) == pytest.approx(expected[kind], abs=1e-9)


# --- classify_trend -------------------------------------------------------------

@pytest.mark.parametrize("series,label", [
    ([1, 2, 3, 4], "increasing"),
    ([4, 3, 2, 1], "decreasing"),
    ([5, 5, 5], "stable"),
    ([1, 100, 1, 100, 1], "stable"),  # symmetric oscillation, zero slope
])
def test_trend_hand_cases(series, label):
    assert analysis.classify_trend(series) == label


def test_trend_errors():
    with pytest.raises(EmptySeries):
        analysis.classify_trend([])
    with pytest.raises(SingletonSeries):
        analysis.classify_trend([1])


# integer-valued inputs keep the check well-conditioned: the invariance is
# exact in real arithmetic but tiny ranges drown in float rounding
@given(st.lists(st.integers(-1000, 1000).map(float), min_size=2, max_size=40),
       st.sampled_from([0.5, 1.0, 2.0, 3.0, 10.0]),
       st.integers(-1000, 1000).map(float))
def test_trend_invariant_under_positive_affine(series, a, b):
    transformed = [a * v + b for v in series]
    assert analysis.classify_trend(series) == analysis.classify_trend(transformed)


# --- detect_outliers ---------------------------------------------------------------

def test_outliers_hand_case():
    assert analysis.detect_outliers([1, 2, 3, 100]) == [3]


def test_outliers_short_series():
    assert analysis.detect_outliers([1, 2, 3]) == []


def test_outliers_zero_iqr():
    assert analysis.detect_outliers([5, 5, 5, 5, 5]) == []


def test_outliers_permutation_invariant_as_multiset():
    series = [1.0, 2.0, 2.5, 3.0, 50.0, 2.2, -40.0]
    rng = random.Random(3)
    flagged = sorted(series[i] for i in analysis.detect_outliers(series))
    for _ in range(10):
        shuffled = series[:]
        rng.shuffle(shuffled)
        assert sorted(shuffled[i] for i in analysis.detect_outliers(shuffled)) == flagged


def test_outliers_match_oracle_on_random_series():
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randint(1, 50)
        series = [rng.gauss(0, 10) for _ in range(n)]
        if n > 4 and rng.random() < 0.5:
            series[rng.randrange(n)] = rng.choice([-1, 1]) * rng.uniform(100, 500)
        assert analysis.detect_outliers(series) == oracle_outliers(series)


# --- compute_correlation ---------------------------------------------------------------

def test_correlation_perfect_linear():
    assert analysis.compute_correlation([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)


def test_correlation_perfect_inverse():
    assert analysis.compute_correlation([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_correlation_zero_variance_absent():
    assert analysis.compute_correlation([1, 2, 3], [5, 5, 5]) is None


def test_correlation_length_mismatch():
    with pytest.raises(LengthMismatch):
        analysis.compute_correlation([1, 2], [1, 2, 3])


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                min_size=2, max_size=30))
def test_correlation_bounded(pairs):
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    value = analysis.compute_correlation(xs, ys)
    if value is not None:
        assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9


# --- facts_for_chart ----------------------------------------------------------------------

def _facts_for(table, config, chart_type):
    for spec in recommend.enumerate_candidates(table, config):
        if spec.chart_type == chart_type:
            data = codegen.slice_for_spec(spec, table)
            return analysis.facts_for_chart(spec, data)
    raise AssertionError(f"no {chart_type} spec")


def test_line_has_trend_scatter_has_correlation(monthly_sales, numeric_pair,
                                                default_config):
    line_kinds = {f.kind for f in _facts_for(monthly_sales, default_config, "line")}
    assert "trend" in line_kinds and "correlation" not in line_kinds
    scatter_kinds = {f.kind for f in _facts_for(numeric_pair, default_config,
                                                "scatter")}
    assert "correlation" in scatter_kinds and "trend" not in scatter_kinds


def test_bubble_stats_per_y_field(numeric_pair, default_config):
    facts = _facts_for(numeric_pair, default_config, "bubble")
    mean_targets = {f.target for f in facts if f.kind == "mean"}
    assert len(mean_targets) == 2


def test_constant_series_trend_stable(default_config):
    table = make_clean("month,v\n2021-01,5\n2021-02,5\n2021-03,5\n")
    facts = _facts_for(table, default_config, "line")
    trend = [f for f in facts if f.kind == "trend"]
    assert trend and trend[0].value == "stable"


def test_fact_text_mentions_target_and_value(default_config):
    from chartforge.util import fmt_num

    table = make_clean("month,sales\n2021-01,10\n2021-02,20\n")
    for fact in _facts_for(table, default_config, "line"):
        assert "sales" in fact.text
        if fact.kind in analysis.SCALAR_KINDS:
            assert fmt_num(fact.value) in fact.text


def test_one_fact_per_kind_target(category_value, default_config):
    facts = _facts_for(category_value, default_config, "bar")
    keys = [(f.kind, f.target) for f in facts]
    assert len(set(keys)) == len(keys)
