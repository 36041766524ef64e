"""Caption review: ratings log, verdict aggregation, and the HTTP API.

Ratings are appended to a JSONL log beside the card store and never edited;
verdicts are recomputed from the full log on every aggregate call.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .cards import (
    REVIEW_FAILED,
    REVIEW_PASSED,
    REVIEW_UNREVIEWED,
    MetadataCard,
    read_cards,
    write_cards,
)
from .codegen import VEGA_LITE
from .errors import (
    DuplicateRating,
    ScoreOutOfRange,
    UnknownCard,
    UnknownWorker,
)

log = logging.getLogger(__name__)

CRITERIA = ("completeness", "consistency", "diversity", "readability")
SCORE_MIN, SCORE_MAX = 1, 5

DEFAULT_THRESHOLD = 3
DEFAULT_MIN_RATERS = 1


@dataclass
class Rating:
    card_id: str
    worker_id: str
    scores: dict[str, int]
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {"card_id": self.card_id, "worker_id": self.worker_id,
                "scores": self.scores, "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, data: dict) -> "Rating":
        return cls(card_id=data["card_id"], worker_id=data["worker_id"],
                   scores={k: int(v) for k, v in data["scores"].items()},
                   timestamp=data.get("timestamp", ""))

    def passes(self, threshold: int) -> bool:
        return all(self.scores[c] >= threshold for c in CRITERIA)


@dataclass
class ReviewVerdict:
    card_id: str
    medians: dict[str, float]
    rating_count: int
    passed: bool

    def to_dict(self) -> dict:
        return {"card_id": self.card_id, "medians": self.medians,
                "rating_count": self.rating_count, "passed": self.passed}


def _median(values: list[int]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    return float(ordered[mid]) if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2


def validate_scores(scores: dict) -> dict[str, int]:
    missing = [c for c in CRITERIA if c not in scores]
    extra = sorted(set(scores) - set(CRITERIA))
    if missing or extra:
        raise ScoreOutOfRange(
            f"scores must cover exactly {list(CRITERIA)}; "
            f"missing={missing} extra={extra}"
        )
    clean: dict[str, int] = {}
    for criterion in CRITERIA:
        value = scores[criterion]
        if not isinstance(value, int) or isinstance(value, bool) \
                or not SCORE_MIN <= value <= SCORE_MAX:
            raise ScoreOutOfRange(
                f"{criterion} score {value!r} outside {SCORE_MIN}..{SCORE_MAX}"
            )
        clean[criterion] = value
    return clean


class ReviewStore:
    """Cards plus an append-only ratings log, safe for concurrent requests."""

    def __init__(self, cards_path: str | Path, ratings_path: str | Path,
                 threshold: int = DEFAULT_THRESHOLD,
                 min_raters: int = DEFAULT_MIN_RATERS,
                 allowed_workers: Optional[tuple[str, ...]] = None):
        self.cards_path = Path(cards_path)
        self.ratings_path = Path(ratings_path)
        self.threshold = threshold
        self.min_raters = min_raters
        self.allowed_workers = allowed_workers
        self._lock = threading.Lock()
        self.cards: dict[str, MetadataCard] = {
            card.chart_id: card for card in read_cards(self.cards_path)
        }
        self.ratings: list[Rating] = []
        self._rated: set[tuple[str, str]] = set()
        if self.ratings_path.exists():
            with open(self.ratings_path, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if line:
                        self._remember(Rating.from_dict(json.loads(line)))

    def _remember(self, rating: Rating) -> None:
        self.ratings.append(rating)
        self._rated.add((rating.card_id, rating.worker_id))

    def _check_worker(self, worker_id: str) -> None:
        if self.allowed_workers is not None and worker_id not in self.allowed_workers:
            raise UnknownWorker(f"worker {worker_id!r} is not registered")

    # -- operations ------------------------------------------------------

    def list_pending(self, worker_id: str, limit: int) -> list[dict]:
        """Cards this worker has not rated yet, card_id ascending."""
        self._check_worker(worker_id)
        items = []
        for card_id in sorted(self.cards):
            if len(items) >= max(0, limit):
                break
            if (card_id, worker_id) in self._rated:
                continue
            card = self.cards[card_id]
            declarative = card.code.get(VEGA_LITE)
            items.append({
                "card_id": card_id,
                "captions": {
                    "overview": card.captions.overview,
                    "analysis": card.captions.analysis,
                },
                "spec_summary": card.spec.title,
                "chart_type": card.spec.chart_type,
                "declarative_code": declarative.text if declarative else None,
            })
        return items

    def submit_rating(self, rating: Rating) -> Rating:
        """Persist one rating append-only; duplicates per (card, worker) rejected."""
        self._check_worker(rating.worker_id)
        if rating.card_id not in self.cards:
            raise UnknownCard(f"card {rating.card_id!r} not in store")
        rating.scores = validate_scores(rating.scores)
        with self._lock:
            if (rating.card_id, rating.worker_id) in self._rated:
                raise DuplicateRating(
                    f"worker {rating.worker_id!r} already rated {rating.card_id!r}"
                )
            if not rating.timestamp:
                rating.timestamp = datetime.now(timezone.utc).isoformat()
            with open(self.ratings_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(rating.to_dict(), sort_keys=True) + "\n")
            self._remember(rating)
        return rating

    def aggregate_verdicts(self, threshold: Optional[int] = None,
                           min_raters: Optional[int] = None) -> list[ReviewVerdict]:
        """Per-card criterion medians; updates unreviewed cards' statuses."""
        threshold = self.threshold if threshold is None else threshold
        min_raters = self.min_raters if min_raters is None else min_raters
        by_card: dict[str, list[Rating]] = {}
        for rating in self.ratings:
            by_card.setdefault(rating.card_id, []).append(rating)

        verdicts: list[ReviewVerdict] = []
        changed = False
        for card_id in sorted(by_card):
            ratings = by_card[card_id]
            if len(ratings) < min_raters:
                continue
            medians = {c: _median([r.scores[c] for r in ratings]) for c in CRITERIA}
            passed = all(medians[c] >= threshold for c in CRITERIA)
            verdicts.append(ReviewVerdict(card_id=card_id, medians=medians,
                                          rating_count=len(ratings), passed=passed))
            card = self.cards.get(card_id)
            if card is None:
                continue
            status = REVIEW_PASSED if passed else REVIEW_FAILED
            if card.review == REVIEW_UNREVIEWED:
                card.review = status
                changed = True
            elif card.review != status:
                # Review transitions only run unreviewed -> passed/failed; a
                # conflicting recompute is logged, never applied.
                log.warning("card %s already %s; verdict %s not applied",
                            card_id, card.review, status)
        if changed:
            write_cards(self.cards_path, self.cards.values())
        return verdicts

    def stats(self) -> dict:
        """Score histograms per criterion and the rating-level pass rate."""
        histograms = {c: {str(s): 0 for s in range(SCORE_MIN, SCORE_MAX + 1)}
                      for c in CRITERIA}
        passing = 0
        for rating in self.ratings:
            for criterion in CRITERIA:
                histograms[criterion][str(rating.scores[criterion])] += 1
            if rating.passes(self.threshold):
                passing += 1
        count = len(self.ratings)
        return {
            "histograms": histograms,
            "rating_count": count,
            "pass_rate": 100.0 * passing / count if count else None,
            "pass_rate_defined": count > 0,
        }


class RatingBody(BaseModel):
    card_id: str
    worker_id: str
    scores: dict[str, int]


class AggregateBody(BaseModel):
    threshold: Optional[int] = None
    min_raters: Optional[int] = None


def create_app(store: ReviewStore, ui_dir: Optional[str | Path] = None):
    """FastAPI app over the documented endpoints, plus static UI at /."""
    app = FastAPI(title="caption review")

    @app.get("/api/health")
    def health():
        return {"status": "ok", "cards": len(store.cards)}

    @app.get("/api/captions/pending")
    def pending(worker: str = Query(...), limit: int = Query(20)):
        try:
            return store.list_pending(worker, limit)
        except UnknownWorker as exc:
            return JSONResponse({"error": str(exc)}, status_code=403)

    @app.post("/api/ratings", status_code=201)
    def submit(body: RatingBody):
        rating = Rating(card_id=body.card_id, worker_id=body.worker_id,
                        scores=dict(body.scores))
        try:
            stored = store.submit_rating(rating)
        except UnknownCard as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        except DuplicateRating as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except ScoreOutOfRange as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except UnknownWorker as exc:
            return JSONResponse({"error": str(exc)}, status_code=403)
        return {"accepted": True, "card_id": stored.card_id,
                "worker_id": stored.worker_id, "timestamp": stored.timestamp}

    @app.post("/api/aggregate")
    def aggregate(body: Optional[AggregateBody] = None):
        body = body or AggregateBody()
        verdicts = store.aggregate_verdicts(body.threshold, body.min_raters)
        return [v.to_dict() for v in verdicts]

    @app.get("/api/stats")
    def stats():
        return store.stats()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
