"""Pipeline configuration: a JSON file on disk, flags layered on top."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import UsageError

ALL_CHART_TYPES = (
    "bar",
    "grouped_bar",
    "stacked_bar",
    "line",
    "area",
    "scatter",
    "bubble",
    "pie",
    "histogram",
    "box",
    "heatmap",
)


@dataclass
class LlmEndpointConfig:
    """Where and how to call the caption endpoint (chat-completions style)."""

    base_url: str = "http://localhost:8000/v1/chat/completions"
    model: str = "caption-model"
    api_key_env: str = "CHARTFORGE_API_KEY"
    timeout: float = 30.0
    max_retries: int = 3
    temperature: float = 0.0
    seed: Optional[int] = 0
    max_in_flight: int = 4

    def validate(self) -> None:
        if self.timeout <= 0:
            raise UsageError("llm.timeout must be > 0")
        if self.max_retries < 0:
            raise UsageError("llm.max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise UsageError("llm.max_in_flight must be >= 1")


@dataclass
class PipelineConfig:
    input_glob: str = "sample_corpus/*.csv"
    workspace_dir: str = "workspace"
    max_specs_per_table: int = 12
    min_specs_per_table: int = 2
    max_candidates_per_table: int = 200
    enabled_chart_types: tuple[str, ...] = ALL_CHART_TYPES
    caption_mode: str = "template"  # template | llm
    llm: LlmEndpointConfig = field(default_factory=LlmEndpointConfig)
    review_threshold: int = 3
    review_min_raters: int = 1
    export_review_filter: bool = False
    parallelism: int = 1
    seed: int = 0  # reserved; the pipeline is deterministic
    emit_spec_files: bool = False
    render_command: Optional[str] = None  # e.g. "render-tool {artifact}"
    allowed_workers: Optional[tuple[str, ...]] = None
    ui_dir: Optional[str] = None  # static bundle served at / by review-serve

    def validate(self) -> None:
        if self.min_specs_per_table < 1:
            raise UsageError("min_specs_per_table must be >= 1")
        if self.max_specs_per_table < self.min_specs_per_table:
            raise UsageError("max_specs_per_table must be >= min_specs_per_table")
        if self.parallelism < 1:
            raise UsageError("parallelism must be >= 1")
        if self.caption_mode not in ("template", "llm"):
            raise UsageError(f"unknown caption_mode {self.caption_mode!r}")
        unknown = set(self.enabled_chart_types) - set(ALL_CHART_TYPES)
        if unknown:
            raise UsageError(f"unknown chart types: {sorted(unknown)}")
        if not (1 <= self.review_threshold <= 5):
            raise UsageError("review_threshold must be in 1..5")
        if self.review_min_raters < 1:
            raise UsageError("review_min_raters must be >= 1")
        self.llm.validate()

    # -- (de)serialization ---------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data["enabled_chart_types"] = list(self.enabled_chart_types)
        if self.allowed_workers is not None:
            data["allowed_workers"] = list(self.allowed_workers)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        data = dict(data)
        llm_data = data.pop("llm", {})
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        llm_known = {f.name for f in dataclasses.fields(LlmEndpointConfig)}
        llm_extra = set(llm_data) - llm_known
        if llm_extra:
            raise UsageError(f"unknown llm config keys: {sorted(llm_extra)}")
        if "enabled_chart_types" in data:
            data["enabled_chart_types"] = tuple(data["enabled_chart_types"])
        if data.get("allowed_workers") is not None:
            data["allowed_workers"] = tuple(data["allowed_workers"])
        cfg = cls(llm=LlmEndpointConfig(**llm_data), **data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from exc
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)
