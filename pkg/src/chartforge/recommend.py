"""Split one clean table into scored chart-spec candidates.

The compatibility matrix and the additive scoring rubric below are the
deterministic stand-in for a learned visualization recommender: every rule
is explicit so a table always maps to the same ranked spec list.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .config import ALL_CHART_TYPES, PipelineConfig
from .errors import NoCandidates
from .ingest import CATEGORICAL, NUMERIC, TEMPORAL, CleanTable
from .util import stable_id

CHART_TYPE_ORDER = {name: i for i, name in enumerate(ALL_CHART_TYPES)}

PIE_MAX_CATEGORIES = 12
SERIES_MAX_DISTINCT = 8
HEATMAP_MAX_DISTINCT = 20

AGG_NONE = "none"
AGG_SUM = "sum"
AGG_MEAN = "mean"
AGG_COUNT = "count"


@dataclass(frozen=True)
class Encoding:
    field: str
    kind: str
    aggregate: str = AGG_NONE

    def to_dict(self) -> dict:
        return {"field": self.field, "kind": self.kind, "aggregate": self.aggregate}

    @classmethod
    def from_dict(cls, data: dict) -> "Encoding":
        return cls(data["field"], data["kind"], data.get("aggregate", AGG_NONE))


@dataclass(frozen=True)
class MarkFlags:
    filled: bool = False
    stacked: bool = False
    smooth: bool = False

    def to_dict(self) -> dict:
        return {"filled": self.filled, "stacked": self.stacked, "smooth": self.smooth}

    @classmethod
    def from_dict(cls, data: dict) -> "MarkFlags":
        return cls(**data)


@dataclass(frozen=True)
class ChartSpec:
    """The visualization intermediate representation one table splits into many of."""

    spec_id: str
    source_id: str
    chart_type: str
    x_encoding: Encoding
    y_encodings: tuple[Encoding, ...]
    series_field: Optional[str] = None
    mark_flags: MarkFlags = field(default_factory=MarkFlags)
    title: str = ""
    axis_labels: tuple[str, str] = ("", "")

    @property
    def fields(self) -> list[str]:
        """Distinct referenced field names, encoding order, x first."""
        names = [self.x_encoding.field] + [e.field for e in self.y_encodings]
        if self.series_field:
            names.append(self.series_field)
        out: list[str] = []
        for name in names:
            if name not in out:
                out.append(name)
        return out

    def to_dict(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "source_id": self.source_id,
            "chart_type": self.chart_type,
            "x_encoding": self.x_encoding.to_dict(),
            "y_encodings": [e.to_dict() for e in self.y_encodings],
            "series_field": self.series_field,
            "mark_flags": self.mark_flags.to_dict(),
            "title": self.title,
            "axis_labels": list(self.axis_labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChartSpec":
        return cls(
            spec_id=data["spec_id"],
            source_id=data["source_id"],
            chart_type=data["chart_type"],
            x_encoding=Encoding.from_dict(data["x_encoding"]),
            y_encodings=tuple(Encoding.from_dict(e) for e in data["y_encodings"]),
            series_field=data.get("series_field"),
            mark_flags=MarkFlags.from_dict(data["mark_flags"]),
            title=data["title"],
            axis_labels=tuple(data["axis_labels"]),
        )


def _spec_id(source_id: str, chart_type: str, x: str, ys: tuple[str, ...],
             series: Optional[str]) -> str:
    return stable_id(source_id, chart_type, x, *ys, series or "")


def _has_duplicates(values: list) -> bool:
    return len(set(values)) < len(values)


def _make_spec(table: CleanTable, chart_type: str, x: Encoding,
               ys: tuple[Encoding, ...], series: Optional[str],
               flags: MarkFlags) -> ChartSpec:
    y_label = " and ".join(e.field for e in ys) if ys else "count"
    if chart_type in ("histogram", "box"):
        title = f"Distribution of {x.field}"
        axis = (x.field, "count" if chart_type == "histogram" else x.field)
    else:
        title = f"{y_label} by {x.field}"
        axis = (x.field, y_label)
    return ChartSpec(
        spec_id=_spec_id(table.source_id, chart_type, x.field,
                         tuple(e.field for e in ys), series),
        source_id=table.source_id,
        chart_type=chart_type,
        x_encoding=x,
        y_encodings=ys,
        series_field=series,
        mark_flags=flags,
        title=title,
        axis_labels=axis,
    )


def _x_aggregate(table: CleanTable, x_name: str, series: Optional[str] = None) -> str:
    """Duplicate categorical keys aggregate by sum, temporal duplicates by mean."""
    prof = table.profile(x_name)
    if series:
        keys = list(zip(table.values(x_name), table.values(series)))
    else:
        keys = table.values(x_name)
    if not _has_duplicates(keys):
        return AGG_NONE
    return AGG_SUM if prof.kind == CATEGORICAL else AGG_MEAN


def enumerate_candidates(table: CleanTable, config: PipelineConfig) -> list[ChartSpec]:
    """Emit every (x, y[, series]) combination the compatibility matrix allows."""
    numeric = [p.name for p, _ in table.columns if p.kind == NUMERIC]
    temporal = [p.name for p, _ in table.columns if p.kind == TEMPORAL]
    categorical = [p.name for p, _ in table.columns if p.kind == CATEGORICAL]
    distinct = {p.name: p.distinct_count for p, _ in table.columns}
    enabled = set(config.enabled_chart_types)

    out: list[ChartSpec] = []

    def add(spec: ChartSpec) -> None:
        if len(out) < config.max_candidates_per_table:
            out.append(spec)

    def enc(name: str, aggregate: str = AGG_NONE) -> Encoding:
        return Encoding(name, table.profile(name).kind, aggregate)

    # line/area: x temporal or ordered-numeric, y numeric
    for x_name in temporal + numeric:
        for y_name in numeric:
            if y_name == x_name:
                continue
            agg = _x_aggregate(table, x_name)
            y = enc(y_name, agg)
            if "line" in enabled:
                add(_make_spec(table, "line", enc(x_name), (y,), None, MarkFlags()))
            if "area" in enabled:
                add(_make_spec(table, "area", enc(x_name), (y,), None,
                               MarkFlags(filled=True)))

    # bar family and pie: x categorical (bar also temporal), y numeric aggregate
    for x_name in categorical + temporal:
        x_kind = table.profile(x_name).kind
        for y_name in numeric:
            agg = _x_aggregate(table, x_name)
            y = enc(y_name, AGG_SUM if agg == AGG_NONE and x_kind == CATEGORICAL else agg)
            if "bar" in enabled:
                add(_make_spec(table, "bar", enc(x_name), (y,), None, MarkFlags()))
            if x_kind == CATEGORICAL and distinct[x_name] <= PIE_MAX_CATEGORIES:
                if "pie" in enabled:
                    add(_make_spec(table, "pie", enc(x_name),
                                   (enc(y_name, AGG_SUM),), None, MarkFlags()))
            for s_name in categorical:
                if s_name == x_name or distinct[s_name] > SERIES_MAX_DISTINCT:
                    continue
                s_agg = _x_aggregate(table, x_name, series=s_name)
                y_s = enc(y_name, AGG_SUM if s_agg == AGG_NONE and x_kind == CATEGORICAL
                          else s_agg)
                if "grouped_bar" in enabled:
                    add(_make_spec(table, "grouped_bar", enc(x_name), (y_s,), s_name,
                                   MarkFlags()))
                if "stacked_bar" in enabled:
                    add(_make_spec(table, "stacked_bar", enc(x_name), (y_s,), s_name,
                                   MarkFlags(stacked=True)))

    # scatter/bubble: numeric x and y (temporal x also admitted)
    for x_name in numeric + temporal:
        for y_name in numeric:
            if y_name == x_name:
                continue
            if "scatter" in enabled:
                add(_make_spec(table, "scatter", enc(x_name), (enc(y_name),), None,
                               MarkFlags()))
            if "bubble" in enabled:
                for size_name in numeric:
                    if size_name in (x_name, y_name):
                        continue
                    add(_make_spec(table, "bubble", enc(x_name),
                                   (enc(y_name), enc(size_name)), None, MarkFlags()))

    # histogram/box: one numeric field (carried on both encodings)
    for name in numeric:
        if "histogram" in enabled:
            add(_make_spec(table, "histogram", enc(name), (enc(name),), None,
                           MarkFlags()))
        if "box" in enabled:
            add(_make_spec(table, "box", enc(name), (enc(name),), None, MarkFlags()))

    # heatmap: two categorical axes, numeric aggregate
    if "heatmap" in enabled:
        for x_name in categorical:
            if distinct[x_name] > HEATMAP_MAX_DISTINCT:
                continue
            for s_name in categorical:
                if s_name == x_name or distinct[s_name] > HEATMAP_MAX_DISTINCT:
                    continue
                for y_name in numeric:
                    add(_make_spec(table, "heatmap", enc(x_name),
                                   (enc(y_name, AGG_SUM),), s_name, MarkFlags()))

    if not out:
        raise NoCandidates(f"{table.source_id}: no compatible chart for this table")
    return out


# --- scoring rubric ---------------------------------------------------------

AFFINITY_DEFAULT = 0.25
CATEGORY_SOFT_CAP = 20
LEGEND_SOFT_CAP = 8
CATEGORY_RAMP = 5  # below this many categories a categorical axis is under-filled


def _affinity(spec: ChartSpec) -> float:
    x_kind = spec.x_encoding.kind
    if spec.chart_type == "line" and x_kind == TEMPORAL:
        return 0.4
    if spec.chart_type == "bar" and x_kind == CATEGORICAL:
        return 0.4
    if spec.chart_type == "scatter" and x_kind == NUMERIC:
        return 0.35
    return AFFINITY_DEFAULT


def _cardinality_fitness(spec: ChartSpec, table: CleanTable) -> float:
    """1.0 for comfortable cardinalities, ramping down linearly past the caps."""
    fit = 1.0
    if spec.x_encoding.kind == CATEGORICAL:
        d = table.profile(spec.x_encoding.field).distinct_count
        if d > CATEGORY_SOFT_CAP:
            fit = min(fit, max(0.0, 1.0 - (d - CATEGORY_SOFT_CAP) / CATEGORY_SOFT_CAP))
        elif d < CATEGORY_RAMP:
            fit = min(fit, d / CATEGORY_RAMP)
    if spec.series_field:
        d = table.profile(spec.series_field).distinct_count
        if d > LEGEND_SOFT_CAP:
            fit = min(fit, max(0.0, 1.0 - (d - LEGEND_SOFT_CAP) / LEGEND_SOFT_CAP))
    return fit


def score_spec(spec: ChartSpec, table: CleanTable) -> float:
    """Additive rubric, clamped to [0, 1].

    Components: 0.4 type/kind affinity, 0.3 cardinality fitness,
    0.2 data coverage, 0.1 nonzero y-variance.
    """
    score = _affinity(spec)
    score += 0.3 * _cardinality_fitness(spec, table)
    score += 0.2 * (len(spec.fields) / max(1, len(table.columns)))

    variance_ok = True
    for y in spec.y_encodings:
        values = table.values(y.field)
        if y.kind == NUMERIC and len(set(values)) <= 1:
            variance_ok = False
    if spec.y_encodings and variance_ok:
        score += 0.1
    return max(0.0, min(1.0, score))


def _sort_key(spec: ChartSpec, score: float):
    return (
        -score,
        CHART_TYPE_ORDER[spec.chart_type],
        spec.x_encoding.field,
        tuple(e.field for e in spec.y_encodings),
        spec.series_field or "",
    )


def recommend(table: CleanTable, config: PipelineConfig) -> list[ChartSpec]:
    """Rank candidates and keep the configured window of specs per table."""
    candidates = enumerate_candidates(table, config)
    scored = [(spec, score_spec(spec, table)) for spec in candidates]

    seen: set[tuple] = set()
    deduped: list[tuple[ChartSpec, float]] = []
    for spec, score in scored:
        key = (spec.chart_type, spec.x_encoding.field,
               tuple(e.field for e in spec.y_encodings), spec.series_field)
        if key in seen:
            continue
        seen.add(key)
        deduped.append((spec, score))

    deduped.sort(key=lambda pair: _sort_key(pair[0], pair[1]))
    return [spec for spec, _ in deduped[: config.max_specs_per_table]]
