"""Stage orchestration over a shared workspace directory.

Every stage reads the previous stage's files and commits its own output via
atomic rename, so a crash mid-stage never corrupts earlier results and any
stage can be re-run in isolation.
"""

from __future__ import annotations

import glob
import logging
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Optional, TypeVar

from . import analysis, caption, cards, codegen, ingest, recommend
from .config import PipelineConfig
from .errors import DataError, EmptyStore, IOFailure
from .util import dump_json_line, read_jsonl, write_atomic, write_jsonl

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

ARTIFACT_SUFFIX = {
    codegen.VEGA_LITE: ".vl.json",
    codegen.MATPLOTLIB_SCRIPT: ".mpl.py.txt",
    codegen.PLOTLY_SCRIPT: ".plotly.py.txt",
}


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def tables(self) -> Path:
        return self.root / "tables.jsonl"

    @property
    def specs(self) -> Path:
        return self.root / "specs.jsonl"

    @property
    def charts_manifest(self) -> Path:
        return self.root / "charts.jsonl"

    @property
    def charts_dir(self) -> Path:
        return self.root / "charts"

    @property
    def facts(self) -> Path:
        return self.root / "facts.jsonl"

    @property
    def captions(self) -> Path:
        return self.root / "captions.jsonl"

    @property
    def cards(self) -> Path:
        return self.root / "cards.jsonl"

    @property
    def ratings(self) -> Path:
        return self.root / "ratings.jsonl"

    @property
    def exports_dir(self) -> Path:
        return self.root / "exports"

    @property
    def llm_cache(self) -> Path:
        return self.root / "llm_cache"

    def require(self, path: Path) -> Path:
        if not self.root.is_dir():
            raise IOFailure(f"workspace directory missing: {self.root}")
        if not path.exists():
            raise IOFailure(f"required stage input missing: {path}")
        return path


def _fan_out(items: list[T], func: Callable[[T], R], parallelism: int) -> list[R]:
    if parallelism > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


# --- stages -----------------------------------------------------------------

def stage_ingest(cfg: PipelineConfig) -> int:
    """CSV files matching the input glob -> cleaned typed tables."""
    ws = Workspace(cfg.workspace_dir)
    paths = sorted(glob.glob(cfg.input_glob))
    if not paths:
        raise IOFailure(f"no CSV files match input_glob {cfg.input_glob!r}")

    def load(path: str) -> Optional[dict]:
        try:
            raw = ingest.read_csv_file(path)
            clean = ingest.clean_table(raw)
        except DataError as exc:
            log.info("discarding %s: %s", path, exc)
            return None
        return clean.to_dict()

    records = [r for r in _fan_out(paths, load, cfg.parallelism) if r is not None]
    if not records:
        raise DataError(f"no table survived cleaning out of {len(paths)} files")
    records.sort(key=lambda r: r["source_id"])
    count = write_jsonl(ws.tables, records)
    log.info("ingest: %d/%d tables kept -> %s", count, len(paths), ws.tables)
    return count


def stage_recommend(cfg: PipelineConfig) -> int:
    """Clean tables -> ranked chart specs."""
    ws = Workspace(cfg.workspace_dir)
    tables = [ingest.CleanTable.from_dict(r) for r in read_jsonl(ws.require(ws.tables))]

    def one(table: ingest.CleanTable) -> list[dict]:
        try:
            specs = recommend.recommend(table, cfg)
        except DataError as exc:
            log.info("no charts for %s: %s", table.source_id, exc)
            return []
        return [spec.to_dict() for spec in specs]

    per_table = _fan_out(tables, one, cfg.parallelism)
    records = [spec for group in per_table for spec in group]
    if not records:
        raise DataError("no table produced any chart spec")
    count = write_jsonl(ws.specs, records)
    if cfg.emit_spec_files:
        spec_dir = ws.root / "specs"
        for record in records:
            write_atomic(spec_dir / f"{record['spec_id']}.json",
                         dump_json_line(record) + "\n")
    log.info("recommend: %d specs from %d tables -> %s",
             count, len(tables), ws.specs)
    return count


def _run_render_hook(command_template: str, artifact_path: Path, spec_id: str) -> None:
    command = command_template.format(artifact=str(artifact_path), spec_id=spec_id)
    try:
        result = subprocess.run(shlex.split(command), capture_output=True, timeout=60)
        if result.returncode != 0:
            log.warning("render hook failed (%d) for %s: %s", result.returncode,
                        artifact_path, result.stderr.decode(errors="replace")[:200])
    except (OSError, subprocess.SubprocessError) as exc:
        log.warning("render hook error for %s: %s", artifact_path, exc)


def stage_codegen(cfg: PipelineConfig) -> int:
    """Specs -> per-chart data slice, three code artifacts, visual elements."""
    ws = Workspace(cfg.workspace_dir)
    tables = {t["source_id"]: ingest.CleanTable.from_dict(t)
              for t in read_jsonl(ws.require(ws.tables))}
    specs = [recommend.ChartSpec.from_dict(r) for r in read_jsonl(ws.require(ws.specs))]
    ws.charts_dir.mkdir(parents=True, exist_ok=True)

    def one(spec: recommend.ChartSpec) -> dict:
        table = tables[spec.source_id]
        data_slice = codegen.slice_for_spec(spec, table)
        artifacts, gaps = codegen.emit_all(spec, data_slice)
        elements = codegen.derive_visual_elements(spec, data_slice)
        write_atomic(ws.charts_dir / f"{spec.spec_id}.data.csv", data_slice.to_csv())
        written = {}
        for grammar, artifact in artifacts.items():
            filename = f"{spec.spec_id}{ARTIFACT_SUFFIX[grammar]}"
            write_atomic(ws.charts_dir / filename, artifact.text)
            written[grammar] = filename
            if cfg.render_command:
                _run_render_hook(cfg.render_command, ws.charts_dir / filename,
                                 spec.spec_id)
        return {
            "spec_id": spec.spec_id,
            "slice": data_slice.to_dict(),
            "elements": elements.to_dict(),
            "gaps": gaps,
            "artifacts": written,
        }

    records = _fan_out(specs, one, cfg.parallelism)
    records.sort(key=lambda r: r["spec_id"])
    count = write_jsonl(ws.charts_manifest, records)
    log.info("codegen: %d charts -> %s + %s/", count, ws.charts_manifest,
             ws.charts_dir)
    return count


def stage_analyze(cfg: PipelineConfig) -> int:
    """Chart slices -> the applicable analysis facts."""
    ws = Workspace(cfg.workspace_dir)
    specs = {r["spec_id"]: recommend.ChartSpec.from_dict(r)
             for r in read_jsonl(ws.require(ws.specs))}
    manifest = list(read_jsonl(ws.require(ws.charts_manifest)))

    def one(entry: dict) -> dict:
        spec = specs[entry["spec_id"]]
        data_slice = codegen.TableSlice.from_dict(entry["slice"])
        facts = analysis.facts_for_chart(spec, data_slice)
        return {"spec_id": spec.spec_id, "facts": [f.to_dict() for f in facts]}

    records = _fan_out(manifest, one, cfg.parallelism)
    records.sort(key=lambda r: r["spec_id"])
    count = write_jsonl(ws.facts, records)
    log.info("analyze: facts for %d charts -> %s", count, ws.facts)
    return count


def stage_caption(cfg: PipelineConfig) -> int:
    """Facts + elements -> one caption pair per chart."""
    ws = Workspace(cfg.workspace_dir)
    specs = {r["spec_id"]: recommend.ChartSpec.from_dict(r)
             for r in read_jsonl(ws.require(ws.specs))}
    manifest = {r["spec_id"]: r for r in read_jsonl(ws.require(ws.charts_manifest))}
    fact_map = {r["spec_id"]: [analysis.AnalysisFact.from_dict(f) for f in r["facts"]]
                for r in read_jsonl(ws.require(ws.facts))}

    cache_dir = None
    workers = cfg.parallelism
    if cfg.caption_mode == "llm":
        cache_dir = ws.llm_cache
        cache_dir.mkdir(parents=True, exist_ok=True)
        workers = cfg.llm.max_in_flight  # bounded in-flight requests

    def one(spec_id: str) -> dict:
        spec = specs[spec_id]
        elements = codegen.VisualElements.from_dict(manifest[spec_id]["elements"])
        facts = fact_map.get(spec_id, [])
        if cfg.caption_mode == "llm":
            pair = caption.generate_llm_pair(spec, facts, elements, cfg.llm,
                                             cache_dir=cache_dir)
        else:
            pair = caption.generate_template(spec, facts, elements)
        return {"spec_id": spec_id, "captions": pair.to_dict()}

    records = _fan_out(sorted(manifest), one, workers)
    records.sort(key=lambda r: r["spec_id"])
    count = write_jsonl(ws.captions, records)
    log.info("caption: %d caption pairs (%s mode) -> %s",
             count, cfg.caption_mode, ws.captions)
    return count


def stage_assemble(cfg: PipelineConfig) -> int:
    """Join every per-chart part into the card store."""
    ws = Workspace(cfg.workspace_dir)
    specs = {r["spec_id"]: recommend.ChartSpec.from_dict(r)
             for r in read_jsonl(ws.require(ws.specs))}
    manifest = {r["spec_id"]: r for r in read_jsonl(ws.require(ws.charts_manifest))}
    fact_map = {r["spec_id"]: [analysis.AnalysisFact.from_dict(f) for f in r["facts"]]
                for r in read_jsonl(ws.require(ws.facts))}
    caption_map = {r["spec_id"]: caption.CaptionPair.from_dict(r["captions"])
                   for r in read_jsonl(ws.require(ws.captions))}

    assembled = []
    for spec_id in sorted(manifest):
        spec = specs[spec_id]
        entry = manifest[spec_id]
        data_slice = codegen.TableSlice.from_dict(entry["slice"])
        artifacts = {}
        for grammar, filename in entry["artifacts"].items():
            path = ws.charts_dir / filename
            artifacts[grammar] = codegen.CodeArtifact(
                grammar=grammar,
                text=path.read_text(encoding="utf-8"),
                data_ref=f"{spec_id}.data.csv",
            )
        card = cards.assemble_card(
            spec=spec,
            data_slice=data_slice,
            code=artifacts,
            elements=codegen.VisualElements.from_dict(entry["elements"]),
            facts=fact_map.get(spec_id, []),
            captions=caption_map[spec_id],
            code_gaps=entry.get("gaps", {}),
        )
        assembled.append(card)
    count = cards.write_cards(ws.cards, assembled)
    log.info("assemble: %d cards -> %s", count, ws.cards)
    return count


def stage_export(cfg: PipelineConfig, task: str) -> int:
    """Card store -> one downstream task's JSONL training file."""
    ws = Workspace(cfg.workspace_dir)
    store = cards.read_cards(ws.require(ws.cards))
    if not store:
        raise EmptyStore(f"no cards in {ws.cards}")
    records = cards.export_task(store, task, review_filter=cfg.export_review_filter)
    out = ws.exports_dir / f"{task}.jsonl"
    write_jsonl(out, records)
    log.info("export: %d %s records -> %s", len(records), task, out)
    return len(records)


def run_all_stages(cfg: PipelineConfig, tasks: Iterable[str] = cards.TASKS) -> dict:
    """Convenience for scripts: every stage in order, template-caption mode."""
    counts = {
        "tables": stage_ingest(cfg),
        "specs": stage_recommend(cfg),
        "charts": stage_codegen(cfg),
        "facts": stage_analyze(cfg),
        "captions": stage_caption(cfg),
        "cards": stage_assemble(cfg),
    }
    for task in tasks:
        counts[f"export_{task}"] = stage_export(cfg, task)
    return counts
