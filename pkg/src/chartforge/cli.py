"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import cards, metrics, pipeline, review
from .config import PipelineConfig
from .errors import DataError, IOFailure, UsageError
from .util import read_jsonl

log = logging.getLogger("chartforge")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

METRIC_CHOICES = ("retrieval", "recall", "mrr", "ndcg", "text", "rouge",
                  "meteor", "table", "qa")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems must exit 1, not argparse's 2
        raise UsageError(message)


class _JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps({"level": record.levelname.lower(),
                           "logger": record.name,
                           "message": record.getMessage()})


def _setup_logging(json_logs: bool, verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if json_logs
                         else logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _build_parser() -> _Parser:
    parser = _Parser(prog="chartforge",
                     description="Chart-dataset synthesis pipeline and metric engine")
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--workspace", help="override workspace_dir")
    parser.add_argument("--json", action="store_true", dest="json_logs",
                        help="machine-readable JSON log lines")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, profile, and clean input CSVs")
    p.add_argument("--input-glob", help="override input_glob")

    p = sub.add_parser("recommend", help="split tables into ranked chart specs")
    p.add_argument("--max-specs", type=int, help="override max_specs_per_table")
    p.add_argument("--min-specs", type=int, help="override min_specs_per_table")

    sub.add_parser("codegen", help="emit code artifacts, slices, visual elements")
    sub.add_parser("analyze", help="compute analysis facts per chart")

    p = sub.add_parser("caption", help="generate caption pairs")
    p.add_argument("--mode", choices=("template", "llm"), help="override caption_mode")

    sub.add_parser("assemble", help="assemble metadata cards")

    p = sub.add_parser("export", help="export one task's training file")
    p.add_argument("--task", required=True, choices=cards.TASKS + ("all",))
    p.add_argument("--review-filter", action="store_true",
                   help="export only review-passed cards")

    p = sub.add_parser("eval", help="score a prediction file against gold")
    p.add_argument("--metric", required=True, choices=METRIC_CHOICES)
    p.add_argument("--pred", required=True, help="JSONL of {id, prediction}")
    p.add_argument("--gold", required=True,
                   help="JSONL gold file (an export file works)")
    p.add_argument("--rel-tol", type=float, default=metrics.DEFAULT_REL_TOL)
    p.add_argument("--k", type=int, action="append", dest="k_values",
                   help="recall cutoff; repeatable (default 1 5 10)")

    p = sub.add_parser("review-serve", help="serve the caption-review HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)

    sub.add_parser("stats", help="print review score histograms and pass rate")
    return parser


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.workspace:
        cfg.workspace_dir = args.workspace
    if getattr(args, "input_glob", None):
        cfg.input_glob = args.input_glob
    if getattr(args, "max_specs", None) is not None:
        cfg.max_specs_per_table = args.max_specs
    if getattr(args, "min_specs", None) is not None:
        cfg.min_specs_per_table = args.min_specs
    if getattr(args, "mode", None):
        cfg.caption_mode = args.mode
    if getattr(args, "review_filter", False):
        cfg.export_review_filter = True
    cfg.validate()
    return cfg


# --- eval file handling -------------------------------------------------------

def _read_required_jsonl(path: str) -> list[dict]:
    file = Path(path)
    if not file.exists():
        raise IOFailure(f"file not found: {file}")
    try:
        rows = list(read_jsonl(file))
    except json.JSONDecodeError as exc:
        raise DataError(f"{file}: invalid JSON line: {exc}") from exc
    if not rows:
        raise DataError(f"{file}: no records")
    return rows


def _gold_entries(rows: list[dict], path: str) -> list[tuple[str, dict]]:
    """(id, row) pairs; rows without an explicit id get their 1-based line number."""
    entries = []
    for i, row in enumerate(rows, start=1):
        entries.append((str(row.get("id", i)), row))
    return entries


def _predictions(rows: list[dict], path: str) -> dict[str, object]:
    preds: dict[str, object] = {}
    for i, row in enumerate(rows, start=1):
        if "prediction" not in row:
            raise DataError(f"{path}: record {i} lacks a 'prediction' field")
        preds[str(row.get("id", i))] = row["prediction"]
    return preds


def _run_eval(args: argparse.Namespace) -> dict:
    gold_rows = _read_required_jsonl(args.gold)
    pred_rows = _read_required_jsonl(args.pred)
    gold = _gold_entries(gold_rows, args.gold)
    preds = _predictions(pred_rows, args.pred)
    missing = sum(1 for gid, _ in gold if gid not in preds)

    metric = args.metric
    if metric in ("retrieval", "recall", "mrr", "ndcg"):
        lists = []
        for gid, row in gold:
            relevant = row.get("relevant_id") or row.get("chart_ref")
            if relevant is None:
                raise DataError(
                    f"{args.gold}: record {gid} lacks relevant_id/chart_ref")
            ranked = preds.get(gid, [])
            if not isinstance(ranked, list):
                raise DataError(f"{args.pred}: record {gid} prediction must be a "
                                "ranked id list for retrieval metrics")
            lists.append(metrics.RankedList(query_id=gid,
                                            ranked_ids=[str(x) for x in ranked],
                                            relevant_id=str(relevant)))
        ks = tuple(args.k_values) if args.k_values else (1, 5, 10)
        report = metrics.evaluate_retrieval(lists, ks=ks)
        if metric != "retrieval":
            prefix = {"recall": "recall@", "mrr": "mrr@", "ndcg": "ndcg@"}[metric]
            report.metrics = {k: v for k, v in report.metrics.items()
                              if k.startswith(prefix)}
    else:
        pairs = []
        for gid, row in gold:
            target = row.get("target_text")
            if target is None:
                raise DataError(f"{args.gold}: record {gid} lacks target_text")
            pairs.append((str(preds.get(gid, "")), str(target)))
        if metric in ("text", "rouge", "meteor"):
            report = metrics.evaluate_text(pairs)
            if metric == "rouge":
                report.metrics = {k: v for k, v in report.metrics.items()
                                  if k.startswith("rouge")}
            elif metric == "meteor":
                report.metrics = {"meteor": report.metrics["meteor"]}
        elif metric == "table":
            report = metrics.evaluate_tables(pairs, rel_tol=args.rel_tol)
        elif metric == "qa":
            report = metrics.evaluate_qa(pairs, rel_tol=args.rel_tol)
        else:
            raise UsageError(f"unknown metric {metric!r}")

    report.config["metric"] = metric
    report.config["missing_predictions"] = missing
    return report.to_dict()


# --- dispatch -------------------------------------------------------------------

def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "eval":
        print(json.dumps(_run_eval(args), indent=2, sort_keys=True))
        return EXIT_OK

    cfg = _load_config(args)
    ws = pipeline.Workspace(cfg.workspace_dir)

    if args.command == "ingest":
        pipeline.stage_ingest(cfg)
    elif args.command == "recommend":
        pipeline.stage_recommend(cfg)
    elif args.command == "codegen":
        pipeline.stage_codegen(cfg)
    elif args.command == "analyze":
        pipeline.stage_analyze(cfg)
    elif args.command == "caption":
        pipeline.stage_caption(cfg)
    elif args.command == "assemble":
        pipeline.stage_assemble(cfg)
    elif args.command == "export":
        tasks = cards.TASKS if args.task == "all" else (args.task,)
        for task in tasks:
            pipeline.stage_export(cfg, task)
    elif args.command == "stats":
        store = review.ReviewStore(ws.require(ws.cards), ws.ratings,
                                   threshold=cfg.review_threshold,
                                   min_raters=cfg.review_min_raters)
        print(json.dumps(store.stats(), indent=2, sort_keys=True))
    elif args.command == "review-serve":
        store = review.ReviewStore(ws.require(ws.cards), ws.ratings,
                                   threshold=cfg.review_threshold,
                                   min_raters=cfg.review_min_raters,
                                   allowed_workers=cfg.allowed_workers)
        app = review.create_app(store, ui_dir=cfg.ui_dir)
        import uvicorn

        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    else:
        raise UsageError(f"unknown command {args.command!r}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _setup_logging(args.json_logs, args.verbose)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IOFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
