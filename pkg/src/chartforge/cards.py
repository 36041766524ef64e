"""Metadata cards: assemble per-chart bundles, persist the store, export tasks.

The store is JSONL with sorted keys so identical pipelines produce
byte-identical files; every export derives from cards alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .analysis import AnalysisFact, SCALAR_KINDS
from .caption import CaptionPair
from .codegen import GRAMMARS, CodeArtifact, TableSlice, VisualElements
from .errors import (
    EmptySlice,
    EmptyStore,
    InconsistentParts,
    NoFacts,
    SchemaVersionError,
)
from .recommend import ChartSpec
from .util import dump_json_line, fmt_num, read_jsonl, write_atomic

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TASKS = ("retrieval", "to_table", "summary", "description", "qa")

REVIEW_UNREVIEWED = "unreviewed"
REVIEW_PASSED = "passed"
REVIEW_FAILED = "failed"
REVIEW_STATES = (REVIEW_UNREVIEWED, REVIEW_PASSED, REVIEW_FAILED)


@dataclass
class MetadataCard:
    chart_id: str
    source_id: str
    data_slice: TableSlice
    spec: ChartSpec
    code: dict[str, CodeArtifact]
    elements: VisualElements
    facts: list[AnalysisFact]
    captions: CaptionPair
    review: str = REVIEW_UNREVIEWED
    code_gaps: dict[str, str] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "chart_id": self.chart_id,
            "source_id": self.source_id,
            "data_slice": self.data_slice.to_dict(),
            "spec": self.spec.to_dict(),
            "code": {g: a.to_dict() for g, a in self.code.items()},
            "code_gaps": self.code_gaps,
            "elements": self.elements.to_dict(),
            "facts": [f.to_dict() for f in self.facts],
            "captions": self.captions.to_dict(),
            "review": self.review,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetadataCard":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"card {data.get('chart_id')!r}: schema_version {version}, "
                f"expected {SCHEMA_VERSION}"
            )
        if data["review"] not in REVIEW_STATES:
            raise InconsistentParts(
                f"card {data.get('chart_id')!r}: unknown review state "
                f"{data['review']!r}"
            )
        return cls(
            chart_id=data["chart_id"],
            source_id=data["source_id"],
            data_slice=TableSlice.from_dict(data["data_slice"]),
            spec=ChartSpec.from_dict(data["spec"]),
            code={g: CodeArtifact.from_dict(a) for g, a in data["code"].items()},
            elements=VisualElements.from_dict(data["elements"]),
            facts=[AnalysisFact.from_dict(f) for f in data["facts"]],
            captions=CaptionPair.from_dict(data["captions"]),
            review=data["review"],
            code_gaps=dict(data.get("code_gaps", {})),
            schema_version=version,
        )


def assemble_card(spec: ChartSpec, data_slice: TableSlice,
                  code: dict[str, CodeArtifact], elements: VisualElements,
                  facts: list[AnalysisFact], captions: CaptionPair,
                  code_gaps: Optional[dict[str, str]] = None) -> MetadataCard:
    """Bundle the parts after checking they share the spec's lineage."""
    gaps = dict(code_gaps or {})
    covered = set(code) | set(gaps)
    if covered != set(GRAMMARS):
        missing = sorted(set(GRAMMARS) - covered)
        raise InconsistentParts(
            f"{spec.spec_id}: grammars neither emitted nor gap-recorded: {missing}"
        )
    expected_ref = f"{spec.spec_id}.data.csv"
    for grammar, artifact in code.items():
        if artifact.grammar != grammar or artifact.data_ref != expected_ref:
            raise InconsistentParts(
                f"{spec.spec_id}: artifact for {grammar} belongs to another chart "
                f"(data_ref {artifact.data_ref})"
            )
    if data_slice.column_names != spec.fields:
        raise InconsistentParts(
            f"{spec.spec_id}: slice columns {data_slice.column_names} do not match "
            f"spec fields {spec.fields}"
        )
    spec_fields = set(spec.fields)
    for fact in facts:
        if not set(fact.target_fields) <= spec_fields:
            raise InconsistentParts(
                f"{spec.spec_id}: fact targets {fact.target_fields} reference fields "
                "outside this spec"
            )
    return MetadataCard(
        chart_id=spec.spec_id,
        source_id=spec.source_id,
        data_slice=data_slice,
        spec=spec,
        code=dict(code),
        elements=elements,
        facts=list(facts),
        captions=captions,
        code_gaps=gaps,
    )


def linearize_table(data_slice: TableSlice) -> str:
    """Pipe-separated text table, numbers at <=6 significant digits."""
    if data_slice.row_count == 0:
        raise EmptySlice("cannot linearize a slice with no rows")
    lines = [" | ".join(data_slice.column_names)]
    for row in data_slice.rows:
        lines.append(" | ".join(
            fmt_num(v) if isinstance(v, (int, float)) else str(v) for v in row))
    return "\n".join(lines)


_QA_SCALAR_PHRASES = {
    "mean": "mean", "median": "median", "stddev": "standard deviation",
    "minimum": "minimum", "maximum": "maximum", "range": "range", "sum": "sum",
}


def generate_qa(card: MetadataCard) -> list[tuple[str, str]]:
    """One (question, answer) pair per fact via fixed templates."""
    if not card.facts:
        raise NoFacts(f"{card.chart_id}: no facts to build QA pairs from")
    pairs: list[tuple[str, str]] = []
    x_field = card.spec.x_encoding.field
    for fact in card.facts:
        if fact.kind in SCALAR_KINDS:
            question = f"What is the {_QA_SCALAR_PHRASES[fact.kind]} of {fact.target}?"
            answer = fmt_num(fact.value)
        elif fact.kind == "trend":
            question = (f"Is {fact.target} increasing, decreasing, or stable "
                        f"over {x_field}?")
            answer = str(fact.value)
        elif fact.kind == "outliers":
            question = f"How many outlier points does {fact.target} contain?"
            answer = str(len(fact.value))
        elif fact.kind == "correlation":
            a, b = fact.target_fields
            question = f"What is the correlation between {a} and {b}?"
            answer = fmt_num(fact.value)
        else:
            continue
        pairs.append((question, answer))
    return pairs


# --- card store ---------------------------------------------------------------

def write_cards(path: str | Path, cards: Iterable[MetadataCard]) -> int:
    ordered = sorted(cards, key=lambda c: c.chart_id)
    ids = [c.chart_id for c in ordered]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InconsistentParts(f"duplicate chart_ids in store: {dupes}")
    text = "".join(dump_json_line(c.to_dict()) + "\n" for c in ordered)
    write_atomic(path, text)
    return len(ordered)


def read_cards(path: str | Path) -> list[MetadataCard]:
    return [MetadataCard.from_dict(record) for record in read_jsonl(path)]


# --- task export ----------------------------------------------------------------

def _records_for_card(card: MetadataCard, task: str) -> list[dict]:
    if task == "retrieval":
        return [
            {"task": task, "chart_ref": card.chart_id,
             "target_text": card.captions.overview},
            {"task": task, "chart_ref": card.chart_id,
             "target_text": card.captions.analysis},
        ]
    if task == "to_table":
        return [{"task": task, "chart_ref": card.chart_id,
                 "target_text": linearize_table(card.data_slice)}]
    if task == "summary":
        return [{"task": task, "chart_ref": card.chart_id,
                 "target_text": card.captions.overview}]
    if task == "description":
        return [{"task": task, "chart_ref": card.chart_id,
                 "target_text": card.captions.analysis}]
    if task == "qa":
        table_text = linearize_table(card.data_slice)
        return [
            {"task": task, "chart_ref": card.chart_id,
             "input_text": f"{question}\n{table_text}", "target_text": answer}
            for question, answer in generate_qa(card)
        ]
    raise ValueError(f"unknown task {task!r}")


def export_task(cards: list[MetadataCard], task: str,
                review_filter: bool = False) -> list[dict]:
    """Flatten the store into one task's training records, chart_id order."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")
    if not cards:
        raise EmptyStore("card store is empty")
    selected = sorted(cards, key=lambda c: c.chart_id)
    if review_filter:
        selected = [c for c in selected if c.review == REVIEW_PASSED]
        if not selected:
            log.warning("review filter on: no cards have passed review; "
                        "exporting 0 records for task %s", task)
            return []
    records: list[dict] = []
    for card in selected:
        records.extend(_records_for_card(card, task))
    return records
