"""Caption stage in llm mode against a local chat-completions stand-in."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from chartforge import cli, pipeline
from chartforge.config import LlmEndpointConfig, PipelineConfig
from chartforge.util import read_jsonl


class _Endpoint(BaseHTTPRequestHandler):
    calls = 0

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        type(self).calls += 1
        prompt = payload["messages"][0]["content"]
        body = json.dumps({
            "choices": [{"message": {
                "content": f"[{payload['model']}] caption #{hash(prompt) % 997}"
            }}]
        }).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Endpoint)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Endpoint.calls = 0
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


def test_llm_caption_stage_and_cache(tmp_path, endpoint):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    (data_dir / "t.csv").write_text(
        "month,sales\n2021-01,5\n2021-02,9\n2021-03,12\n")
    cfg = PipelineConfig(
        input_glob=str(data_dir / "*.csv"),
        workspace_dir=str(tmp_path / "ws"),
        max_specs_per_table=3,
        min_specs_per_table=1,
        caption_mode="llm",
        llm=LlmEndpointConfig(base_url=endpoint, model="stub-model",
                              timeout=5.0, max_retries=1, max_in_flight=2),
    )
    pipeline.stage_ingest(cfg)
    pipeline.stage_recommend(cfg)
    pipeline.stage_codegen(cfg)
    pipeline.stage_analyze(cfg)
    count = pipeline.stage_caption(cfg)
    assert count == 3
    first_calls = _Endpoint.calls
    assert first_calls == 2 * count  # two prompts per chart

    records = list(read_jsonl(tmp_path / "ws" / "captions.jsonl"))
    for record in records:
        captions = record["captions"]
        assert captions["generator"] == "llm"
        assert captions["model_id"] == "stub-model"
        assert captions["overview"].startswith("[stub-model]")

    # rerun: everything served from the content-addressed cache
    pipeline.stage_caption(cfg)
    assert _Endpoint.calls == first_calls

    pipeline.stage_assemble(cfg)
    pipeline.stage_export(cfg, "summary")
    summary = list(read_jsonl(tmp_path / "ws" / "exports" / "summary.jsonl"))
    assert len(summary) == count


def test_cli_export_review_filter_flag(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    (data_dir / "t.csv").write_text("region,v\nNorth,3\nSouth,8\nEast,5\n")
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "input_glob": str(data_dir / "*.csv"),
        "workspace_dir": str(tmp_path / "ws"),
        "max_specs_per_table": 2,
        "min_specs_per_table": 1,
    }))
    for command in ("ingest", "recommend", "codegen", "analyze", "caption",
                    "assemble"):
        assert cli.main(["--config", str(config_path), command]) == 0
    assert cli.main(["--config", str(config_path), "export", "--task", "summary",
                     "--review-filter"]) == 0
    records = list(read_jsonl(tmp_path / "ws" / "exports" / "summary.jsonl"))
    assert records == []  # nothing reviewed yet
    assert cli.main(["--config", str(config_path), "export",
                     "--task", "summary"]) == 0
    assert list(read_jsonl(tmp_path / "ws" / "exports" / "summary.jsonl"))
