"""Low-level statistical facts computed from a chart's data slice."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .codegen import TableSlice
from .errors import EmptySeries, LengthMismatch, SingletonSeries
from .ingest import NUMERIC
from .recommend import ChartSpec
from .util import fmt_num

FACT_KINDS = (
    "mean", "median", "stddev", "minimum", "maximum",
    "range", "sum", "trend", "outliers", "correlation",
)

SCALAR_KINDS = ("mean", "median", "stddev", "minimum", "maximum", "range", "sum")

TREND_THRESHOLD = 0.1

TREND_CHART_TYPES = {"line", "area"}
CORRELATION_CHART_TYPES = {"scatter", "bubble"}


@dataclass
class StatsRecord:
    mean: float
    median: float
    stddev: float
    minimum: float
    maximum: float
    range: float
    sum: float

    def by_kind(self, kind: str) -> float:
        return getattr(self, kind)


def compute_stats(series: Sequence[float]) -> StatsRecord:
    """Seven scalar statistics; sample (n-1) standard deviation."""
    n = len(series)
    if n == 0:
        raise EmptySeries("stats over an empty series")
    total = math.fsum(series)
    mean = total / n
    ordered = sorted(series)
    mid = n // 2
    median = float(ordered[mid]) if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2
    if n == 1:
        stddev = 0.0
    else:
        stddev = math.sqrt(math.fsum((v - mean) ** 2 for v in series) / (n - 1))
    lo, hi = ordered[0], ordered[-1]
    return StatsRecord(
        mean=mean, median=median, stddev=stddev,
        minimum=float(lo), maximum=float(hi), range=float(hi - lo), sum=total,
    )


def classify_trend(series: Sequence[float]) -> str:
    """Label an ordered series by its range-normalized least-squares drift."""
    n = len(series)
    if n == 0:
        raise EmptySeries("trend over an empty series")
    if n == 1:
        raise SingletonSeries("trend over a single point")
    lo, hi = min(series), max(series)
    if hi == lo:
        return "stable"
    x_mean = (n - 1) / 2
    y_mean = math.fsum(series) / n
    num = math.fsum((i - x_mean) * (y - y_mean) for i, y in enumerate(series))
    den = math.fsum((i - x_mean) ** 2 for i in range(n))
    slope = num / den
    drift = slope * (n - 1) / (hi - lo)
    if drift > TREND_THRESHOLD:
        return "increasing"
    if drift < -TREND_THRESHOLD:
        return "decreasing"
    return "stable"


def _quartile(ordered: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile over a pre-sorted series."""
    pos = (len(ordered) - 1) * q
    lo = math.floor(pos)
    frac = pos - lo
    if lo + 1 < len(ordered):
        return ordered[lo] + frac * (ordered[lo + 1] - ordered[lo])
    return float(ordered[lo])


def detect_outliers(series: Sequence[float]) -> list[int]:
    """Indices outside the Tukey fences; empty for series shorter than 4."""
    if len(series) < 4:
        return []
    ordered = sorted(series)
    q1 = _quartile(ordered, 0.25)
    q3 = _quartile(ordered, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    return [i for i, v in enumerate(series) if v < lo_fence or v > hi_fence]


def compute_correlation(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson coefficient; None when either series has zero variance."""
    if len(x) != len(y):
        raise LengthMismatch(f"series lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        return None
    x_mean = math.fsum(x) / n
    y_mean = math.fsum(y) / n
    x_var = math.fsum((v - x_mean) ** 2 for v in x)
    y_var = math.fsum((v - y_mean) ** 2 for v in y)
    if x_var == 0 or y_var == 0:
        return None
    cov = math.fsum((a - x_mean) * (b - y_mean) for a, b in zip(x, y))
    # sqrt before multiplying: the raw variance product can underflow to 0
    return cov / (math.sqrt(x_var) * math.sqrt(y_var))


@dataclass
class AnalysisFact:
    kind: str
    target: Union[str, tuple[str, str]]
    value: Union[float, str, list[int]]
    text: str

    def to_dict(self) -> dict:
        target = list(self.target) if isinstance(self.target, tuple) else self.target
        return {"kind": self.kind, "target": target, "value": self.value,
                "text": self.text}

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisFact":
        target = data["target"]
        if isinstance(target, list):
            target = tuple(target)
        return cls(kind=data["kind"], target=target, value=data["value"],
                   text=data["text"])

    @property
    def target_fields(self) -> tuple[str, ...]:
        return self.target if isinstance(self.target, tuple) else (self.target,)


_SCALAR_PHRASES = {
    "mean": "mean",
    "median": "median",
    "stddev": "standard deviation",
    "minimum": "minimum",
    "maximum": "maximum",
    "range": "range",
    "sum": "sum",
}


def _scalar_fact(kind: str, field: str, value: float) -> AnalysisFact:
    text = f"The {_SCALAR_PHRASES[kind]} of {field} is {fmt_num(value)}."
    return AnalysisFact(kind=kind, target=field, value=value, text=text)


def facts_for_chart(spec: ChartSpec, data: TableSlice) -> list[AnalysisFact]:
    """The applicable fact subset for this chart type, one fact per (kind, target)."""
    facts: list[AnalysisFact] = []

    y_fields: list[str] = []
    for y in spec.y_encodings:
        if y.kind == NUMERIC and y.field not in y_fields:
            y_fields.append(y.field)

    for field in y_fields:
        series = data.column(field)
        stats = compute_stats(series)
        for kind in SCALAR_KINDS:
            facts.append(_scalar_fact(kind, field, stats.by_kind(kind)))
        indices = detect_outliers(series)
        noun = "outlier point" if len(indices) == 1 else "outlier points"
        detail = f" (rows {', '.join(str(i) for i in indices)})" if indices else ""
        facts.append(AnalysisFact(
            kind="outliers", target=field, value=indices,
            text=f"{field} contains {len(indices)} {noun}{detail}.",
        ))

    if spec.chart_type in TREND_CHART_TYPES:
        x_field = spec.x_encoding.field
        for field in y_fields:
            series = data.column(field)
            if len(series) < 2:
                continue
            label = classify_trend(series)
            facts.append(AnalysisFact(
                kind="trend", target=field, value=label,
                text=f"{field} is {label} over {x_field}.",
            ))

    if spec.chart_type in CORRELATION_CHART_TYPES and spec.x_encoding.kind == NUMERIC:
        x_field = spec.x_encoding.field
        y_field = spec.y_encodings[0].field
        value = compute_correlation(data.column(x_field), data.column(y_field))
        if value is not None:
            facts.append(AnalysisFact(
                kind="correlation", target=(x_field, y_field), value=value,
                text=(f"The correlation between {x_field} and {y_field} "
                      f"is {fmt_num(value)}."),
            ))

    return facts
