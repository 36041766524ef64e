"""Transpile chart specs into three visualization-grammar artifacts.

The grammar names ("vega-lite", "matplotlib-script", "plotly-script") label
emitted text formats only; none of them is a runtime dependency. Every
emitter is a pure function of (spec, slice) with byte-stable output.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import EmptyData, UnsupportedCombination
from .ingest import CATEGORICAL, NUMERIC, TEMPORAL, CleanTable, parse_temporal
from .recommend import AGG_MEAN, AGG_NONE, AGG_SUM, ChartSpec
from .util import fmt_num, num_for_json

VEGA_LITE = "vega-lite"
MATPLOTLIB_SCRIPT = "matplotlib-script"
PLOTLY_SCRIPT = "plotly-script"
GRAMMARS = (VEGA_LITE, MATPLOTLIB_SCRIPT, PLOTLY_SCRIPT)

# The plotly-script template set has no box template; the gap is recorded on
# the card rather than silently approximated with a different mark.
_UNSUPPORTED: dict[tuple[str, str], str] = {
    ("box", PLOTLY_SCRIPT): "no box template in the plotly-script grammar",
}

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

AXIS_PAD_FRACTION = 0.05
NUMERIC_TICK_COUNT = 5


@dataclass
class TableSlice:
    """The chart's plot-ready data: spec fields only, aggregated and ordered."""

    columns: list[tuple[str, str]]  # (name, kind)
    rows: list[list]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def column_names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def column(self, name: str) -> list:
        idx = self.column_names.index(name)
        return [row[idx] for row in self.rows]

    def kind(self, name: str) -> str:
        for col_name, col_kind in self.columns:
            if col_name == name:
                return col_kind
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"columns": [list(c) for c in self.columns], "rows": self.rows}

    @classmethod
    def from_dict(cls, data: dict) -> "TableSlice":
        return cls(
            columns=[tuple(c) for c in data["columns"]],
            rows=[list(r) for r in data["rows"]],
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.column_names)
        for row in self.rows:
            writer.writerow([fmt_num(v) if isinstance(v, (int, float)) else v
                             for v in row])
        return out.getvalue()


def _order_key(kind: str):
    if kind == TEMPORAL:
        return lambda v: (parse_temporal(v) or v, str(v))
    if kind == NUMERIC:
        return lambda v: v
    return None  # categorical keeps first-appearance order


_GROUPED_TYPES = {"line", "area", "bar", "grouped_bar", "stacked_bar", "pie", "heatmap"}


def slice_for_spec(spec: ChartSpec, table: CleanTable) -> TableSlice:
    """Project the clean table onto the spec's fields; aggregate and order it."""
    fields = spec.fields
    columns = [(name, table.profile(name).kind) for name in fields]
    raw_rows = list(zip(*(table.values(name) for name in fields)))

    if spec.chart_type not in _GROUPED_TYPES:
        return TableSlice(columns=columns, rows=[list(r) for r in raw_rows])

    x_name = spec.x_encoding.field
    y_name = spec.y_encodings[0].field
    aggregate = spec.y_encodings[0].aggregate
    series = spec.series_field

    x_idx = fields.index(x_name)
    y_idx = fields.index(y_name)
    s_idx = fields.index(series) if series else None

    groups: dict[tuple, list[float]] = {}
    x_order: list = []
    s_order: list = []
    for row in raw_rows:
        key = (row[x_idx], row[s_idx]) if s_idx is not None else (row[x_idx],)
        if row[x_idx] not in x_order:
            x_order.append(row[x_idx])
        if s_idx is not None and row[s_idx] not in s_order:
            s_order.append(row[s_idx])
        groups.setdefault(key, []).append(row[y_idx])

    sort_key = _order_key(spec.x_encoding.kind)
    if sort_key is not None:
        x_order.sort(key=sort_key)

    def reduce(values: list[float]) -> float:
        if aggregate == AGG_SUM:
            return sum(values)
        if aggregate == AGG_MEAN:
            return sum(values) / len(values)
        return values[0]  # unique keys when aggregate is none

    rows: list[list] = []
    for x_val in x_order:
        series_iter = s_order if s_idx is not None else [None]
        for s_val in series_iter:
            key = (x_val, s_val) if s_idx is not None else (x_val,)
            if key not in groups:
                continue
            value = reduce(groups[key])
            row: list = [None] * len(fields)
            row[x_idx] = x_val
            row[y_idx] = value
            if s_idx is not None:
                row[s_idx] = s_val
            rows.append(row)

    return TableSlice(columns=columns, rows=rows)


# --- visual elements --------------------------------------------------------

@dataclass
class VisualElements:
    legend_entries: list[str] = field(default_factory=list)
    axis_ranges: tuple[Optional[float], Optional[float],
                       Optional[float], Optional[float]] = (None, None, None, None)
    tick_labels: dict[str, list[str]] = field(default_factory=dict)
    color_assignment: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "legend_entries": self.legend_entries,
            "axis_ranges": list(self.axis_ranges),
            "tick_labels": self.tick_labels,
            "color_assignment": self.color_assignment,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VisualElements":
        return cls(
            legend_entries=list(data["legend_entries"]),
            axis_ranges=tuple(data["axis_ranges"]),
            tick_labels=dict(data["tick_labels"]),
            color_assignment=dict(data["color_assignment"]),
        )


def _padded_range(values: list[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    pad = AXIS_PAD_FRACTION * (hi - lo)
    return lo - pad, hi + pad


def _numeric_ticks(values: list[float]) -> list[str]:
    lo, hi = min(values), max(values)
    if lo == hi:
        return [fmt_num(lo)]
    step = (hi - lo) / (NUMERIC_TICK_COUNT - 1)
    return [fmt_num(lo + i * step) for i in range(NUMERIC_TICK_COUNT)]


def _first_appearance(values: list) -> list:
    out: list = []
    for v in values:
        if v not in out:
            out.append(v)
    return out


def derive_visual_elements(spec: ChartSpec, data: TableSlice) -> VisualElements:
    """Legend order, padded numeric axis ranges, ticks, and palette colors."""
    legend: list[str] = []
    if spec.series_field:
        legend = [str(v) for v in _first_appearance(data.column(spec.series_field))]

    x_min = x_max = y_min = y_max = None
    x_vals = data.column(spec.x_encoding.field)
    if spec.x_encoding.kind == NUMERIC and x_vals:
        x_min, x_max = _padded_range(x_vals)

    y_numeric: list[float] = []
    for y in spec.y_encodings:
        if y.kind == NUMERIC:
            y_numeric.extend(data.column(y.field))
    if y_numeric:
        y_min, y_max = _padded_range(y_numeric)

    ticks: dict[str, list[str]] = {}
    if spec.x_encoding.kind == NUMERIC and x_vals:
        ticks["x"] = _numeric_ticks(x_vals)
    else:
        ticks["x"] = [str(v) for v in _first_appearance(x_vals)]
    if spec.chart_type == "heatmap":
        ticks["y"] = list(legend)
    elif y_numeric:
        ticks["y"] = _numeric_ticks(y_numeric)
    else:
        ticks["y"] = []

    # Colors cycle the palette over the legend when present, otherwise over
    # pie categories, otherwise over the y fields.
    if legend:
        color_domain = legend
    elif spec.chart_type == "pie":
        color_domain = [str(v) for v in _first_appearance(x_vals)]
    else:
        color_domain = [y.field for y in spec.y_encodings]
    colors = {name: PALETTE[i % len(PALETTE)] for i, name in enumerate(color_domain)}

    return VisualElements(
        legend_entries=legend,
        axis_ranges=(x_min, x_max, y_min, y_max),
        tick_labels=ticks,
        color_assignment=colors,
    )


# --- code artifacts ---------------------------------------------------------

@dataclass
class CodeArtifact:
    grammar: str
    text: str
    data_ref: str

    def to_dict(self) -> dict:
        return {"grammar": self.grammar, "text": self.text, "data_ref": self.data_ref}

    @classmethod
    def from_dict(cls, data: dict) -> "CodeArtifact":
        return cls(data["grammar"], data["text"], data["data_ref"])


_VL_TYPES = {NUMERIC: "quantitative", TEMPORAL: "temporal", CATEGORICAL: "nominal"}


def _bar_variant(spec: ChartSpec) -> str:
    if spec.series_field:
        return "stacked" if spec.mark_flags.stacked else "grouped"
    return "plain"


def _line_mark(spec: ChartSpec) -> dict:
    mark: dict = {"type": "area" if spec.mark_flags.filled else "line"}
    if spec.mark_flags.smooth:
        mark["interpolate"] = "monotone"
    return mark


def _channel(enc, title: Optional[str] = None) -> dict:
    out: dict = {"field": enc.field, "type": _VL_TYPES[enc.kind]}
    if enc.aggregate != AGG_NONE:
        out["aggregate"] = enc.aggregate
    out["title"] = title if title is not None else enc.field
    return out


def _vega_lite_doc(spec: ChartSpec, data: TableSlice) -> dict:
    values = []
    for row in data.rows:
        item = {}
        for (name, _), value in zip(data.columns, row):
            item[name] = num_for_json(value) if isinstance(value, (int, float)) else value
        values.append(item)

    doc: dict = {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "title": spec.title,
        "data": {"values": values},
    }
    x = spec.x_encoding
    y0 = spec.y_encodings[0] if spec.y_encodings else None
    kind = spec.chart_type

    if kind in ("line", "area"):
        doc["mark"] = _line_mark(spec)
        doc["encoding"] = {"x": _channel(x), "y": _channel(y0)}
    elif kind in ("bar", "grouped_bar", "stacked_bar"):
        doc["mark"] = {"type": "bar"}
        encoding = {"x": _channel(x), "y": _channel(y0)}
        variant = _bar_variant(spec)
        if variant == "grouped":
            encoding["y"]["stack"] = None
            encoding["color"] = {"field": spec.series_field, "type": "nominal"}
            encoding["xOffset"] = {"field": spec.series_field}
        elif variant == "stacked":
            encoding["y"]["stack"] = "zero"
            encoding["color"] = {"field": spec.series_field, "type": "nominal"}
        doc["encoding"] = encoding
    elif kind == "pie":
        doc["mark"] = {"type": "arc"}
        doc["encoding"] = {
            "theta": _channel(y0),
            "color": {"field": x.field, "type": "nominal", "title": x.field},
        }
    elif kind in ("scatter", "bubble"):
        doc["mark"] = {"type": "point"}
        encoding = {"x": _channel(x), "y": _channel(spec.y_encodings[0])}
        if kind == "bubble":
            encoding["size"] = _channel(spec.y_encodings[1])
        doc["encoding"] = encoding
    elif kind == "histogram":
        doc["mark"] = {"type": "bar"}
        doc["encoding"] = {
            "x": {"field": x.field, "type": "quantitative", "bin": True,
                  "title": x.field},
            "y": {"aggregate": "count", "type": "quantitative", "title": "count"},
        }
    elif kind == "box":
        doc["mark"] = {"type": "boxplot"}
        doc["encoding"] = {"y": _channel(spec.y_encodings[0])}
    elif kind == "heatmap":
        doc["mark"] = {"type": "rect"}
        doc["encoding"] = {
            "x": {"field": x.field, "type": "nominal", "title": x.field},
            "y": {"field": spec.series_field, "type": "nominal",
                  "title": spec.series_field},
            "color": _channel(y0),
        }
    else:
        raise UnsupportedCombination(f"no declarative template for {kind}")
    return doc


def _emit_vega_lite(spec: ChartSpec, data: TableSlice, data_ref: str) -> str:
    doc = _vega_lite_doc(spec, data)
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _q(name: str) -> str:
    return json.dumps(name, ensure_ascii=False)


def _emit_matplotlib(spec: ChartSpec, data: TableSlice, data_ref: str) -> str:
    x = spec.x_encoding.field
    ys = [e.field for e in spec.y_encodings]
    series = spec.series_field
    kind = spec.chart_type
    xl, yl = spec.axis_labels
    color0 = f'"{PALETTE[0]}"'

    body: list[str] = []
    axis_lines = [f"ax.set_xlabel({_q(xl)})", f"ax.set_ylabel({_q(yl)})"]

    if kind in ("line", "area"):
        filled = spec.mark_flags.filled
        body.append(f"ax.plot(df[{_q(x)}], df[{_q(ys[0])}], color={color0}, marker=\"o\")")
        if filled:
            body.append(f"ax.fill_between(range(len(df)), df[{_q(ys[0])}], color={color0}, alpha=0.4)")
    elif kind == "bar" and not series:
        body.append(f"ax.bar(df[{_q(x)}].astype(str), df[{_q(ys[0])}], color={color0})")
    elif kind in ("bar", "grouped_bar", "stacked_bar"):
        stacked = _bar_variant(spec) == "stacked"
        body.append(f"pivot = df.pivot_table(index={_q(x)}, columns={_q(series)}, "
                    f"values={_q(ys[0])}, aggfunc=\"sum\", sort=False).fillna(0)")
        body.append("positions = range(len(pivot.index))")
        if stacked:
            body.append("bottom = [0.0] * len(pivot.index)")
            body.append("for i, name in enumerate(pivot.columns):")
            body.append("    ax.bar(positions, pivot[name], bottom=bottom, "
                        "label=str(name), color=PALETTE[i % len(PALETTE)])")
            body.append("    bottom = [b + v for b, v in zip(bottom, pivot[name])]")
        else:
            body.append("width = 0.8 / max(1, len(pivot.columns))")
            body.append("for i, name in enumerate(pivot.columns):")
            body.append("    ax.bar([p + i * width for p in positions], pivot[name], "
                        "width=width, label=str(name), color=PALETTE[i % len(PALETTE)])")
        body.append("ax.set_xticks(positions, [str(v) for v in pivot.index])")
        body.append(f"ax.legend(title={_q(series)})")
    elif kind == "pie":
        body.append(f"totals = df.groupby({_q(x)}, sort=False)[{_q(ys[0])}].sum()")
        body.append("ax.pie(totals, labels=[str(v) for v in totals.index], "
                    "colors=[PALETTE[i % len(PALETTE)] for i in range(len(totals))])")
        axis_lines = []
    elif kind == "scatter":
        body.append(f"ax.scatter(df[{_q(x)}], df[{_q(ys[0])}], color={color0})")
    elif kind == "bubble":
        body.append(f"sizes = df[{_q(ys[1])}]")
        body.append("span = max(sizes.max() - sizes.min(), 1e-9)")
        body.append("scaled = 20 + 180 * (sizes - sizes.min()) / span")
        body.append(f"ax.scatter(df[{_q(x)}], df[{_q(ys[0])}], s=scaled, "
                    f"color={color0}, alpha=0.6)")
    elif kind == "histogram":
        body.append(f"ax.hist(df[{_q(x)}], bins=10, color={color0})")
        axis_lines = [f"ax.set_xlabel({_q(xl)})", 'ax.set_ylabel("count")']
    elif kind == "box":
        body.append(f"ax.boxplot(df[{_q(ys[0])}], tick_labels=[{_q(ys[0])}])")
        axis_lines = [f"ax.set_ylabel({_q(ys[0])})"]
    elif kind == "heatmap":
        body.append(f"pivot = df.pivot_table(index={_q(series)}, columns={_q(x)}, "
                    f"values={_q(ys[0])}, aggfunc=\"sum\", sort=False).fillna(0)")
        body.append("image = ax.imshow(pivot.values, aspect=\"auto\", cmap=\"viridis\")")
        body.append("ax.set_xticks(range(len(pivot.columns)), "
                    "[str(v) for v in pivot.columns], rotation=45)")
        body.append("ax.set_yticks(range(len(pivot.index)), "
                    "[str(v) for v in pivot.index])")
        body.append(f"fig.colorbar(image, ax=ax, label={_q(ys[0])})")
        axis_lines = [f"ax.set_xlabel({_q(xl)})", f"ax.set_ylabel({_q(series)})"]
    else:
        raise UnsupportedCombination(f"no matplotlib-script template for {kind}")

    lines = [
        "# Generated chart script (matplotlib-script grammar)",
        "import pandas as pd",
        "import matplotlib.pyplot as plt",
        "",
        "PALETTE = [" + ", ".join(f'"{c}"' for c in PALETTE) + "]",
        "",
        f"df = pd.read_csv({_q(data_ref)})",
        "fig, ax = plt.subplots(figsize=(8, 5))",
        *body,
        *axis_lines,
        f"ax.set_title({_q(spec.title)})",
        "fig.tight_layout()",
        "plt.show()",
    ]
    return "\n".join(lines) + "\n"


def _emit_plotly(spec: ChartSpec, data: TableSlice, data_ref: str) -> str:
    x = spec.x_encoding.field
    ys = [e.field for e in spec.y_encodings]
    series = spec.series_field
    kind = spec.chart_type

    if kind in ("line", "area"):
        func = "px.area" if spec.mark_flags.filled else "px.line"
        call = f"{func}(df, x={_q(x)}, y={_q(ys[0])}, title={_q(spec.title)})"
    elif kind in ("bar", "grouped_bar", "stacked_bar"):
        if series:
            mode = "stack" if _bar_variant(spec) == "stacked" else "group"
            call = (f"px.bar(df, x={_q(x)}, y={_q(ys[0])}, color={_q(series)}, "
                    f"barmode=\"{mode}\", title={_q(spec.title)})")
        else:
            call = f"px.bar(df, x={_q(x)}, y={_q(ys[0])}, title={_q(spec.title)})"
    elif kind == "pie":
        call = f"px.pie(df, names={_q(x)}, values={_q(ys[0])}, title={_q(spec.title)})"
    elif kind == "scatter":
        call = f"px.scatter(df, x={_q(x)}, y={_q(ys[0])}, title={_q(spec.title)})"
    elif kind == "bubble":
        call = (f"px.scatter(df, x={_q(x)}, y={_q(ys[0])}, size={_q(ys[1])}, "
                f"title={_q(spec.title)})")
    elif kind == "histogram":
        call = f"px.histogram(df, x={_q(x)}, nbins=10, title={_q(spec.title)})"
    elif kind == "heatmap":
        call = (f"px.density_heatmap(df, x={_q(x)}, y={_q(series)}, z={_q(ys[0])}, "
                f"histfunc=\"sum\", title={_q(spec.title)})")
    else:
        raise UnsupportedCombination(f"no plotly-script template for {kind}")

    lines = [
        "# Generated chart script (plotly-script grammar)",
        "import pandas as pd",
        "import plotly.express as px",
        "",
        f"df = pd.read_csv({_q(data_ref)})",
        f"fig = {call}",
        "fig.show()",
    ]
    return "\n".join(lines) + "\n"


def emit_code(spec: ChartSpec, data: TableSlice, grammar: str) -> CodeArtifact:
    """Emit one grammar's artifact for the spec; deterministic text."""
    if data.row_count == 0:
        raise EmptyData(f"{spec.spec_id}: data slice has no rows")
    if (spec.chart_type, grammar) in _UNSUPPORTED:
        raise UnsupportedCombination(
            f"{spec.spec_id}: {_UNSUPPORTED[(spec.chart_type, grammar)]}"
        )
    data_ref = f"{spec.spec_id}.data.csv"
    if grammar == VEGA_LITE:
        text = _emit_vega_lite(spec, data, data_ref)
    elif grammar == MATPLOTLIB_SCRIPT:
        text = _emit_matplotlib(spec, data, data_ref)
    elif grammar == PLOTLY_SCRIPT:
        text = _emit_plotly(spec, data, data_ref)
    else:
        raise UnsupportedCombination(f"unknown grammar {grammar!r}")
    return CodeArtifact(grammar=grammar, text=text, data_ref=data_ref)


def emit_all(spec: ChartSpec, data: TableSlice) -> tuple[dict[str, CodeArtifact],
                                                         dict[str, str]]:
    """All three grammars; capability gaps come back as reasons, not artifacts."""
    artifacts: dict[str, CodeArtifact] = {}
    gaps: dict[str, str] = {}
    for grammar in GRAMMARS:
        try:
            artifacts[grammar] = emit_code(spec, data, grammar)
        except UnsupportedCombination as exc:
            gaps[grammar] = str(exc)
    return artifacts, gaps
