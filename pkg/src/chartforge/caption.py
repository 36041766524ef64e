"""Two-dimensional caption pairs: overview + analysis, via LLM or templates.

The LLM path talks to a chat-completions-style HTTP endpoint and caches
completions content-addressed on (model, prompt), so reruns are free. The
template path is a pure function of the chart's parts and needs no network.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .analysis import AnalysisFact
from .codegen import VisualElements
from .config import LlmEndpointConfig
from .errors import EmptyCompletion, HttpError, Timeout
from .recommend import ChartSpec
from .util import write_atomic

log = logging.getLogger(__name__)

OVERVIEW_MAX_CHARS = 500
ANALYSIS_FACT_BUDGET = 4

# Highest-salience fact kinds first; remaining kinds keep emission order.
SALIENCE_ORDER = ("trend", "outliers", "maximum", "mean")

NO_FACTS_MARKER = "No computed facts are available for this chart."


@dataclass
class CaptionPair:
    overview: str
    analysis: str
    generator: str  # "llm" | "template"
    model_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "overview": self.overview,
            "analysis": self.analysis,
            "generator": self.generator,
            "model_id": self.model_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CaptionPair":
        return cls(
            overview=data["overview"],
            analysis=data["analysis"],
            generator=data["generator"],
            model_id=data.get("model_id"),
        )


def _chart_phrase(spec: ChartSpec) -> str:
    type_name = spec.chart_type.replace("_", " ")
    y_label = " and ".join(e.field for e in spec.y_encodings)
    x_field = spec.x_encoding.field
    if spec.chart_type in ("histogram", "box") or y_label == x_field:
        phrase = f"This {type_name} chart shows the distribution of {x_field}."
    else:
        phrase = f"This {type_name} chart shows {y_label} by {x_field}"
        if spec.series_field:
            phrase += f", grouped by {spec.series_field}"
        phrase += "."
    return phrase


def build_prompts(spec: ChartSpec, facts: list[AnalysisFact],
                  elements: VisualElements) -> tuple[str, str]:
    """Deterministic (overview, analysis) prompts for the caption endpoint."""
    type_name = spec.chart_type.replace("_", " ")
    field_list = ", ".join(spec.fields)
    legend = ", ".join(elements.legend_entries) if elements.legend_entries else "none"

    overview = (
        "Write one paragraph (at most 80 words) giving a high-level overview "
        "of a chart. Name the chart type, the fields involved, and the topic. "
        "Do not invent numbers.\n"
        f"Chart type: {type_name}\n"
        f"Title: {spec.title}\n"
        f"Fields: {field_list}\n"
        f"Legend: {legend}\n"
    )

    if facts:
        fact_block = "\n".join(f"- {f.text}" for f in facts)
    else:
        fact_block = NO_FACTS_MARKER
    analysis = (
        "Write an insight-focused interpretation of a chart's data using only "
        "the computed facts below. Highlight trends, extremes, and anomalies; "
        "do not invent values.\n"
        f"Chart type: {type_name}\n"
        f"Title: {spec.title}\n"
        "Computed facts:\n"
        f"{fact_block}\n"
    )
    return overview, analysis


# --- LLM endpoint client ----------------------------------------------------

# transport(url, payload, headers, timeout) -> (status_code, parsed_json_or_text)
Transport = Callable[[str, dict, dict, float], tuple[int, object]]

_cache_lock = threading.Lock()


def _requests_transport(url: str, payload: dict, headers: dict,
                        timeout: float) -> tuple[int, object]:
    import requests

    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.Timeout as exc:
        raise Timeout(f"endpoint did not answer within {timeout}s") from exc
    except requests.RequestException as exc:
        raise HttpError(599, str(exc)) from exc
    try:
        body: object = response.json()
    except ValueError:
        body = response.text
    return response.status_code, body


def _cache_path(cache_dir: Path, model: str, prompt: str) -> Path:
    key = hashlib.sha256(f"{model}\x00{prompt}".encode("utf-8")).hexdigest()
    return cache_dir / f"{key}.json"


def _extract_completion(body: object) -> str:
    if isinstance(body, dict):
        choices = body.get("choices") or []
        if choices and isinstance(choices[0], dict):
            message = choices[0].get("message") or {}
            return str(message.get("content") or "").strip()
    return ""


def generate_with_llm(prompt: str, cfg: LlmEndpointConfig,
                      cache_dir: Optional[str | Path] = None,
                      transport: Optional[Transport] = None,
                      sleep: Callable[[float], None] = time.sleep) -> str:
    """Fetch one completion, with backoff retries and a content-addressed cache."""
    import os

    cache_file: Optional[Path] = None
    if cache_dir is not None:
        cache_file = _cache_path(Path(cache_dir), cfg.model, prompt)
        if cache_file.exists():
            return json.loads(cache_file.read_text(encoding="utf-8"))["completion"]

    payload: dict = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
    }
    if cfg.seed is not None:
        payload["seed"] = cfg.seed
    api_key = os.environ.get(cfg.api_key_env, "")
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    log.debug("caption request model=%s prompt_bytes=%d key=%s",
              cfg.model, len(prompt), "<redacted>" if api_key else "<none>")

    send = transport or _requests_transport
    attempts = cfg.max_retries + 1
    last_error: Exception = HttpError(599, "no attempt made")
    for attempt in range(attempts):
        if attempt:
            delay = (2 ** (attempt - 1)) * (1 + random.uniform(-0.2, 0.2))
            sleep(delay)
        try:
            status, body = send(cfg.base_url, payload, headers, cfg.timeout)
        except Timeout as exc:
            last_error = exc
            continue
        if status >= 500:
            last_error = HttpError(status, str(body)[:500])
            continue
        if status >= 400:
            raise HttpError(status, str(body)[:500])
        completion = _extract_completion(body)
        log.debug("caption response status=%d completion_bytes=%d",
                  status, len(completion))
        if not completion:
            raise EmptyCompletion(f"model {cfg.model} returned an empty completion")
        if cache_file is not None:
            with _cache_lock:
                write_atomic(cache_file, json.dumps(
                    {"model": cfg.model, "completion": completion}, ensure_ascii=False))
        return completion
    raise last_error


def generate_llm_pair(spec: ChartSpec, facts: list[AnalysisFact],
                      elements: VisualElements, cfg: LlmEndpointConfig,
                      cache_dir: Optional[str | Path] = None,
                      transport: Optional[Transport] = None) -> CaptionPair:
    overview_prompt, analysis_prompt = build_prompts(spec, facts, elements)
    overview = generate_with_llm(overview_prompt, cfg, cache_dir, transport)
    analysis = generate_with_llm(analysis_prompt, cfg, cache_dir, transport)
    return CaptionPair(overview=overview, analysis=analysis,
                       generator="llm", model_id=cfg.model)


# --- template fallback -------------------------------------------------------

def _salience_rank(fact: AnalysisFact) -> int:
    try:
        return SALIENCE_ORDER.index(fact.kind)
    except ValueError:
        return len(SALIENCE_ORDER)


def generate_template(spec: ChartSpec, facts: list[AnalysisFact],
                      elements: VisualElements) -> CaptionPair:
    """Offline caption pair: fixed overview sentence, top-salience fact texts."""
    overview = _chart_phrase(spec)
    if len(overview) > OVERVIEW_MAX_CHARS:
        overview = overview[: OVERVIEW_MAX_CHARS - 1] + "."

    ranked = sorted(enumerate(facts), key=lambda p: (_salience_rank(p[1]), p[0]))
    chosen = [fact for _, fact in ranked[:ANALYSIS_FACT_BUDGET]]
    analysis = " ".join(fact.text for fact in chosen) if chosen else NO_FACTS_MARKER

    return CaptionPair(overview=overview, analysis=analysis,
                       generator="template", model_id=None)
