import dataclasses
import logging

import pytest

from chartforge import analysis, caption, cards, codegen, metrics, recommend
from chartforge.cards import MetadataCard
from chartforge.codegen import TableSlice
from chartforge.errors import (
    EmptySlice,
    EmptyStore,
    InconsistentParts,
    NoFacts,
    SchemaVersionError,
)
from conftest import make_clean


def build_card(table, config, chart_type, suffix="") -> MetadataCard:
    for spec in recommend.enumerate_candidates(table, config):
        if spec.chart_type != chart_type:
            continue
        if suffix:
            spec = dataclasses.replace(spec, spec_id=spec.spec_id + suffix)
        data = codegen.slice_for_spec(spec, table)
        artifacts, gaps = codegen.emit_all(spec, data)
        elements = codegen.derive_visual_elements(spec, data)
        facts = analysis.facts_for_chart(spec, data)
        pair = caption.generate_template(spec, facts, elements)
        return cards.assemble_card(spec, data, artifacts, elements, facts, pair,
                                   code_gaps=gaps)
    raise AssertionError(f"no {chart_type} spec")


@pytest.fixture
def line_card(monthly_sales, default_config) -> MetadataCard:
    return build_card(monthly_sales, default_config, "line")


@pytest.fixture
def small_store(monthly_sales, category_value, numeric_pair, default_config):
    store = []
    for table in (monthly_sales, category_value, numeric_pair):
        for chart_type in ("line", "bar", "scatter", "histogram"):
            try:
                store.append(build_card(table, default_config, chart_type))
            except AssertionError:
                continue
    assert len(store) >= 5
    return store


# --- assemble_card ----------------------------------------------------------

def test_assemble_valid_parts(line_card):
    assert line_card.review == "unreviewed"
    assert set(line_card.code) == set(codegen.GRAMMARS)
    assert line_card.schema_version == cards.SCHEMA_VERSION


def test_assemble_rejects_foreign_facts(monthly_sales, default_config):
    spec = recommend.recommend(monthly_sales, default_config)[0]
    data = codegen.slice_for_spec(spec, monthly_sales)
    artifacts, gaps = codegen.emit_all(spec, data)
    elements = codegen.derive_visual_elements(spec, data)
    pair = caption.generate_template(spec, [], elements)
    foreign = [analysis.AnalysisFact("mean", "other_field", 1.0,
                                     "The mean of other_field is 1.")]
    with pytest.raises(InconsistentParts):
        cards.assemble_card(spec, data, artifacts, elements, foreign, pair,
                            code_gaps=gaps)


def test_assemble_rejects_missing_grammar(monthly_sales, default_config):
    spec = recommend.recommend(monthly_sales, default_config)[0]
    data = codegen.slice_for_spec(spec, monthly_sales)
    artifacts, _ = codegen.emit_all(spec, data)
    artifacts.pop(codegen.PLOTLY_SCRIPT)
    elements = codegen.derive_visual_elements(spec, data)
    pair = caption.generate_template(spec, [], elements)
    with pytest.raises(InconsistentParts):
        cards.assemble_card(spec, data, artifacts, elements, [], pair)


def test_assemble_accepts_recorded_gap(default_config):
    table = make_clean("v\n1\n2\n3\n4\n")
    card = build_card(table, default_config, "box")
    assert codegen.PLOTLY_SCRIPT in card.code_gaps
    assert set(card.code) | set(card.code_gaps) == set(codegen.GRAMMARS)


def test_assemble_rejects_artifact_from_other_chart(monthly_sales, default_config):
    spec = recommend.recommend(monthly_sales, default_config)[0]
    data = codegen.slice_for_spec(spec, monthly_sales)
    artifacts, gaps = codegen.emit_all(spec, data)
    stolen = dataclasses.replace(artifacts[codegen.VEGA_LITE],
                                 data_ref="someone_else.data.csv")
    artifacts[codegen.VEGA_LITE] = stolen
    elements = codegen.derive_visual_elements(spec, data)
    pair = caption.generate_template(spec, [], elements)
    with pytest.raises(InconsistentParts):
        cards.assemble_card(spec, data, artifacts, elements, [], pair,
                            code_gaps=gaps)


# --- linearize_table -------------------------------------------------------------

def test_linearize_basic():
    data = TableSlice(columns=[("a", "numeric"), ("b", "numeric")],
                      rows=[[1.0, 3.0], [2.0, 4.0]])
    assert cards.linearize_table(data) == "a | b\n1 | 3\n2 | 4"


def test_linearize_trims_float_noise():
    data = TableSlice(columns=[("v", "numeric")], rows=[[3.1400000]])
    assert cards.linearize_table(data) == "v\n3.14"


def test_linearize_empty_slice():
    with pytest.raises(EmptySlice):
        cards.linearize_table(TableSlice(columns=[("v", "numeric")], rows=[]))


# --- generate_qa --------------------------------------------------------------------

def test_qa_templates(line_card):
    pairs = dict(cards.generate_qa(line_card))
    mean_fact = next(f for f in line_card.facts if f.kind == "mean")
    from chartforge.util import fmt_num

    assert pairs["What is the mean of sales?"] == fmt_num(mean_fact.value)
    trend_fact = next(f for f in line_card.facts if f.kind == "trend")
    assert pairs["Is sales increasing, decreasing, or stable over month?"] == \
        str(trend_fact.value)
    outlier_fact = next(f for f in line_card.facts if f.kind == "outliers")
    assert pairs["How many outlier points does sales contain?"] == \
        str(len(outlier_fact.value))


def test_qa_requires_facts(line_card):
    bare = dataclasses.replace(line_card, facts=[])
    with pytest.raises(NoFacts):
        cards.generate_qa(bare)


def test_qa_one_pair_per_fact(line_card):
    assert len(cards.generate_qa(line_card)) == len(line_card.facts)


# --- store round-trip -----------------------------------------------------------------

def test_store_round_trip(tmp_path, small_store):
    path = tmp_path / "cards.jsonl"
    cards.write_cards(path, small_store)
    loaded = cards.read_cards(path)
    assert len(loaded) == len(small_store)
    by_id = {c.chart_id: c for c in small_store}
    for card in loaded:
        assert card.to_dict() == by_id[card.chart_id].to_dict()


def test_store_byte_identical_rewrites(tmp_path, small_store):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    cards.write_cards(a, small_store)
    cards.write_cards(b, list(reversed(small_store)))  # order-insensitive
    assert a.read_bytes() == b.read_bytes()


def test_store_rejects_unknown_schema(tmp_path, line_card):
    path = tmp_path / "cards.jsonl"
    record = line_card.to_dict()
    record["schema_version"] = 99
    path.write_text(__import__("json").dumps(record) + "\n")
    with pytest.raises(SchemaVersionError):
        cards.read_cards(path)


def test_store_rejects_duplicate_ids(tmp_path, line_card):
    with pytest.raises(InconsistentParts):
        cards.write_cards(tmp_path / "cards.jsonl", [line_card, line_card])


# --- export_task --------------------------------------------------------------------------

def test_retrieval_two_records_per_card(small_store):
    records = cards.export_task(small_store, "retrieval")
    assert len(records) == 2 * len(small_store)
    by_card = {}
    for record in records:
        by_card.setdefault(record["chart_ref"], []).append(record["target_text"])
    for card in small_store:
        assert by_card[card.chart_id] == [card.captions.overview,
                                          card.captions.analysis]


def test_summary_targets_verbatim_overview(small_store):
    records = cards.export_task(small_store, "summary")
    by_id = {c.chart_id: c for c in small_store}
    for record in records:
        assert record["target_text"] == by_id[record["chart_ref"]].captions.overview


def test_description_targets_analysis(small_store):
    records = cards.export_task(small_store, "description")
    by_id = {c.chart_id: c for c in small_store}
    for record in records:
        assert record["target_text"] == by_id[record["chart_ref"]].captions.analysis


def test_qa_records_carry_linearized_table(small_store):
    records = cards.export_task(small_store, "qa")
    by_id = {c.chart_id: c for c in small_store}
    for record in records:
        table_text = cards.linearize_table(by_id[record["chart_ref"]].data_slice)
        assert record["input_text"].endswith(table_text)
        assert record["target_text"]


def test_to_table_self_match_scores_one(small_store):
    for record in cards.export_task(small_store, "to_table"):
        assert metrics.table_recall_f1(record["target_text"],
                                       record["target_text"]) == (1.0, 1.0, 1.0)


def test_review_filter_excludes_unreviewed(small_store, caplog):
    with caplog.at_level(logging.WARNING):
        records = cards.export_task(small_store, "qa", review_filter=True)
    assert records == []
    assert any("review filter" in message for message in caplog.messages)


def test_review_filter_keeps_passed(small_store):
    small_store[0].review = cards.REVIEW_PASSED
    records = cards.export_task(small_store, "summary", review_filter=True)
    assert [r["chart_ref"] for r in records] == [small_store[0].chart_id]
    small_store[0].review = cards.REVIEW_UNREVIEWED


def test_export_empty_store():
    with pytest.raises(EmptyStore):
        cards.export_task([], "summary")


def test_export_ordering_deterministic(small_store):
    first = cards.export_task(small_store, "retrieval")
    second = cards.export_task(list(reversed(small_store)), "retrieval")
    assert first == second
