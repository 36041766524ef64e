import json
from pathlib import Path

import pytest

from chartforge import cli
from chartforge.util import read_jsonl

MINI_TABLES = {
    "orders.csv": ("month,orders\n2021-01,10\n2021-02,14\n2021-03,13\n"
                   "2021-04,18\n2021-05,21\n"),
    "regions.csv": "region,revenue\nNorth,120\nSouth,80\nEast,95\nWest,140\n",
    "points.csv": "depth,pressure\n1,11\n2,19\n3,32\n4,38\n5,52\n",
    "broken.csv": "name,label\nfoo,bar\nbaz,qux\n",  # text-only, discarded
}


@pytest.fixture
def mini_project(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    for name, text in MINI_TABLES.items():
        (data_dir / name).write_text(text)
    config = {
        "input_glob": str(data_dir / "*.csv"),
        "workspace_dir": str(tmp_path / "ws"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    return tmp_path, config_path


def run(config_path, *argv):
    return cli.main(["--config", str(config_path), *argv])


def run_pipeline(config_path):
    for command in ("ingest", "recommend", "codegen", "analyze", "caption",
                    "assemble"):
        assert run(config_path, command) == 0


# --- stage plumbing ---------------------------------------------------------

def test_full_pipeline_and_caption_ratio(mini_project):
    tmp_path, config_path = mini_project
    run_pipeline(config_path)
    assert run(config_path, "export", "--task", "all") == 0

    ws = tmp_path / "ws"
    cards = list(read_jsonl(ws / "cards.jsonl"))
    assert cards, "pipeline produced no cards"
    sources = {c["source_id"] for c in cards}
    assert "broken" not in sources  # text-only csv was discarded
    for card in cards:
        captions = card["captions"]
        assert captions["overview"] and captions["analysis"]

    retrieval = list(read_jsonl(ws / "exports" / "retrieval.jsonl"))
    assert len(retrieval) == 2 * len(cards)
    for task in ("to_table", "summary", "description", "qa"):
        assert (ws / "exports" / f"{task}.jsonl").exists()

    # per-chart artifact files exist
    for card in cards[:3]:
        chart_id = card["chart_id"]
        for suffix in (".vl.json", ".mpl.py.txt", ".data.csv"):
            expected = ws / "charts" / f"{chart_id}{suffix}"
            if suffix == ".mpl.py.txt" and "matplotlib-script" not in card["code"]:
                continue
            assert expected.exists(), expected


def test_rerun_is_byte_identical(mini_project):
    tmp_path, config_path = mini_project
    run_pipeline(config_path)
    ws = tmp_path / "ws"
    first = (ws / "cards.jsonl").read_bytes()
    run_pipeline(config_path)
    assert (ws / "cards.jsonl").read_bytes() == first


def test_stage_flag_overrides(mini_project):
    tmp_path, config_path = mini_project
    assert run(config_path, "ingest") == 0
    assert run(config_path, "recommend", "--max-specs", "1",
               "--min-specs", "1") == 0
    specs = list(read_jsonl(tmp_path / "ws" / "specs.jsonl"))
    per_table = {}
    for spec in specs:
        per_table[spec["source_id"]] = per_table.get(spec["source_id"], 0) + 1
    assert all(count == 1 for count in per_table.values())


# --- exit codes ----------------------------------------------------------------

def test_missing_workspace_exit_3(tmp_path, capsys):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"workspace_dir": str(tmp_path / "absent")}))
    code = cli.main(["--config", str(config_path), "recommend"])
    assert code == 3
    assert str(tmp_path / "absent") in capsys.readouterr().err


def test_usage_error_exit_1(capsys):
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["eval", "--metric", "bogus", "--pred", "x", "--gold", "y"]) == 1


def test_unknown_config_key_exit_1(tmp_path, capsys):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"no_such_key": 1}))
    assert cli.main(["--config", str(config_path), "ingest"]) == 1


def test_data_error_exit_2(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    (data_dir / "only.csv").write_text("a,b\nx,y\nu,v\n")  # text-only
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "input_glob": str(data_dir / "*.csv"),
        "workspace_dir": str(tmp_path / "ws"),
    }))
    assert cli.main(["--config", str(config_path), "ingest"]) == 2


def test_no_matching_inputs_exit_3(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "input_glob": str(tmp_path / "nowhere" / "*.csv"),
        "workspace_dir": str(tmp_path / "ws"),
    }))
    assert cli.main(["--config", str(config_path), "ingest"]) == 3


# --- eval subcommand ----------------------------------------------------------------

def write_jsonl_file(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def test_eval_ndcg_all_rank_one(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl_file(gold, [{"id": f"q{i}", "relevant_id": f"c{i}"}
                            for i in range(4)])
    write_jsonl_file(pred, [{"id": f"q{i}",
                             "prediction": [f"c{i}", "other1", "other2"]}
                            for i in range(4)])
    code = cli.main(["eval", "--metric", "ndcg", "--pred", str(pred),
                     "--gold", str(gold)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"] == {"ndcg@10": 1.0}
    assert report["count"] == 4


def test_eval_retrieval_from_export_gold(tmp_path, capsys):
    gold = tmp_path / "retrieval.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl_file(gold, [
        {"task": "retrieval", "chart_ref": "chartA", "target_text": "o"},
        {"task": "retrieval", "chart_ref": "chartB", "target_text": "a"},
    ])
    # gold ids default to line numbers
    write_jsonl_file(pred, [
        {"id": "1", "prediction": ["chartA", "chartB"]},
        {"id": "2", "prediction": ["chartA", "chartB"]},
    ])
    assert cli.main(["eval", "--metric", "retrieval", "--pred", str(pred),
                     "--gold", str(gold)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["recall@1"] == 50.0
    assert report["metrics"]["mrr@10"] == 0.75


def test_eval_text_metrics(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl_file(gold, [{"id": "a", "target_text": "the cat ran"}])
    write_jsonl_file(pred, [{"id": "a", "prediction": "the cat sat"}])
    assert cli.main(["eval", "--metric", "rouge", "--pred", str(pred),
                     "--gold", str(gold)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["rouge_1"] == pytest.approx(2 / 3)
    assert "meteor" not in report["metrics"]


def test_eval_qa_accuracy(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl_file(gold, [{"id": "1", "target_text": "100"},
                            {"id": "2", "target_text": "increasing"}])
    write_jsonl_file(pred, [{"id": "1", "prediction": "104"},
                            {"id": "2", "prediction": "Increasing"}])
    assert cli.main(["eval", "--metric", "qa", "--pred", str(pred),
                     "--gold", str(gold)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["accuracy"] == 100.0


def test_eval_missing_pred_file_exit_3(tmp_path):
    gold = tmp_path / "gold.jsonl"
    write_jsonl_file(gold, [{"id": "1", "target_text": "x"}])
    assert cli.main(["eval", "--metric", "qa", "--pred",
                     str(tmp_path / "absent.jsonl"), "--gold", str(gold)]) == 3


def test_eval_missing_predictions_counted(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl_file(gold, [{"id": "1", "target_text": "x"},
                            {"id": "2", "target_text": "y"}])
    write_jsonl_file(pred, [{"id": "1", "prediction": "x"}])
    assert cli.main(["eval", "--metric", "qa", "--pred", str(pred),
                     "--gold", str(gold)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["config"]["missing_predictions"] == 1
    assert report["metrics"]["accuracy"] == 50.0


# --- review stats subcommand -----------------------------------------------------------

def test_stats_subcommand(mini_project, capsys):
    tmp_path, config_path = mini_project
    run_pipeline(config_path)
    assert run(config_path, "stats") == 0
    data = json.loads(capsys.readouterr().out)
    assert data["rating_count"] == 0
    assert data["pass_rate_defined"] is False


# --- render hook -----------------------------------------------------------------------

def test_render_hook_invoked_and_failures_nonfatal(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    (data_dir / "t.csv").write_text(MINI_TABLES["regions.csv"])
    marker_dir = tmp_path / "rendered"
    marker_dir.mkdir()
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "input_glob": str(data_dir / "*.csv"),
        "workspace_dir": str(tmp_path / "ws"),
        "max_specs_per_table": 2,
        "min_specs_per_table": 1,
        "render_command": f"cp {{artifact}} {marker_dir}/",
    }))
    assert run(config_path, "ingest") == 0
    assert run(config_path, "recommend") == 0
    assert run(config_path, "codegen") == 0
    assert list(marker_dir.iterdir()), "render hook produced no files"

    # failing hook: stage still succeeds
    config_path.write_text(json.dumps({
        "input_glob": str(data_dir / "*.csv"),
        "workspace_dir": str(tmp_path / "ws2"),
        "max_specs_per_table": 2,
        "min_specs_per_table": 1,
        "render_command": "false {artifact}",
    }))
    assert run(config_path, "ingest") == 0
    assert run(config_path, "recommend") == 0
    assert run(config_path, "codegen") == 0


# --- spec-file emission and parallel determinism -------------------------------

def test_emit_spec_files(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    (data_dir / "t.csv").write_text(MINI_TABLES["orders.csv"])
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "input_glob": str(data_dir / "*.csv"),
        "workspace_dir": str(tmp_path / "ws"),
        "emit_spec_files": True,
        "max_specs_per_table": 3,
        "min_specs_per_table": 1,
    }))
    assert run(config_path, "ingest") == 0
    assert run(config_path, "recommend") == 0
    spec_dir = tmp_path / "ws" / "specs"
    files = sorted(spec_dir.glob("*.json"))
    assert len(files) == 3
    specs = list(read_jsonl(tmp_path / "ws" / "specs.jsonl"))
    for spec in specs:
        standalone = json.loads((spec_dir / f"{spec['spec_id']}.json").read_text())
        assert standalone == spec  # same schema fragment as the card store


def test_parallel_run_matches_serial(mini_project):
    tmp_path, config_path = mini_project
    run_pipeline(config_path)
    serial = (tmp_path / "ws" / "cards.jsonl").read_bytes()

    parallel_cfg = tmp_path / "parallel.json"
    parallel_cfg.write_text(json.dumps({
        "input_glob": json.loads((tmp_path / "config.json").read_text())["input_glob"],
        "workspace_dir": str(tmp_path / "ws_par"),
        "parallelism": 4,
    }))
    for command in ("ingest", "recommend", "codegen", "analyze", "caption",
                    "assemble"):
        assert cli.main(["--config", str(parallel_cfg), command]) == 0
    assert (tmp_path / "ws_par" / "cards.jsonl").read_bytes() == serial
