"""Evaluation metrics: retrieval ranking, contrastive loss, table matching,
text overlap, and relaxed QA accuracy.

Retrieval uses a binary single-relevant relevance model (one gold chart per
query). ROUGE scores are reported as F1. METEOR matches exact unigrams only;
no synonym resources are consulted, so scores are comparable only within
this toolkit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

from .errors import (
    EmptyEvalInput,
    IndexOutOfRange,
    InvalidTau,
    LengthMismatch,
    ParseError,
    ZeroVector,
)

DEFAULT_REL_TOL = 0.05
REL_TOL_EPS = 1e-12
RANK_CUTOFF = 10


# --- embeddings and ranking ---------------------------------------------------

@dataclass
class Embedding:
    id: str
    vector: list[float]


@dataclass
class RankedList:
    query_id: str
    ranked_ids: list[str]
    relevant_id: Optional[str] = None

    def rank_of_relevant(self) -> Optional[int]:
        """1-based rank, or None when the relevant id is absent."""
        try:
            return self.ranked_ids.index(self.relevant_id) + 1
        except ValueError:
            return None


def load_embeddings(path) -> list[Embedding]:
    """Read an id->vector JSONL file ({"id": ..., "vector": [...]})."""
    import json

    out: list[Embedding] = []
    length: Optional[int] = None
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            vector = [float(v) for v in record["vector"]]
            if length is None:
                length = len(vector)
            elif len(vector) != length:
                raise LengthMismatch(
                    f"{path}:{line_no}: vector length {len(vector)} != {length}")
            if not any(vector):
                raise ZeroVector(f"{path}:{line_no}: all-zero vector")
            out.append(Embedding(id=str(record["id"]), vector=vector))
    if not out:
        raise EmptyEvalInput(f"{path}: no embeddings")
    return out


def cosine_sim(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise LengthMismatch(f"vector lengths differ: {len(u)} vs {len(v)}")
    norm_u = math.sqrt(math.fsum(a * a for a in u))
    norm_v = math.sqrt(math.fsum(b * b for b in v))
    if norm_u == 0 or norm_v == 0:
        raise ZeroVector("cosine similarity against an all-zero vector")
    return math.fsum(a * b for a, b in zip(u, v)) / (norm_u * norm_v)


def rank_charts(query: Embedding, charts: Sequence[Embedding], k: int,
                relevant_id: Optional[str] = None) -> RankedList:
    """Top-k chart ids by cosine similarity, ties broken lexicographically."""
    if not charts:
        raise EmptyEvalInput("cannot rank an empty chart collection")
    scored = [(-cosine_sim(query.vector, c.vector), c.id) for c in charts]
    scored.sort()
    return RankedList(
        query_id=query.id,
        ranked_ids=[cid for _, cid in scored[: max(0, k)]],
        relevant_id=relevant_id,
    )


# --- contrastive loss -----------------------------------------------------------

def contrastive_loss(sim_row: Sequence[float], correct_index: int, tau: float) -> float:
    """Temperature-scaled softmax cross-entropy over one similarity row."""
    if tau <= 0:
        raise InvalidTau(f"tau must be > 0, got {tau}")
    n = len(sim_row)
    if not 0 <= correct_index < n:
        raise IndexOutOfRange(f"correct_index {correct_index} outside row of {n}")
    scaled = [s / tau for s in sim_row]
    peak = max(scaled)
    log_norm = peak + math.log(math.fsum(math.exp(z - peak) for z in scaled))
    return log_norm - scaled[correct_index]


def mean_contrastive_loss(sim_rows: Sequence[Sequence[float]],
                          correct_indices: Sequence[int], tau: float) -> float:
    if len(sim_rows) != len(correct_indices):
        raise LengthMismatch("one correct index per similarity row required")
    if not sim_rows:
        raise EmptyEvalInput("no similarity rows")
    total = math.fsum(contrastive_loss(row, idx, tau)
                      for row, idx in zip(sim_rows, correct_indices))
    return total / len(sim_rows)


# --- retrieval metrics ------------------------------------------------------------

def recall_at_k(lists: Sequence[RankedList], k: int) -> float:
    """Percentage of queries whose relevant id appears in the top k."""
    if not lists:
        raise EmptyEvalInput("no ranked lists")
    hits = sum(1 for rl in lists
               if (rank := rl.rank_of_relevant()) is not None and rank <= k)
    return 100.0 * hits / len(lists)


def mrr_at_10(lists: Sequence[RankedList]) -> float:
    if not lists:
        raise EmptyEvalInput("no ranked lists")
    total = 0.0
    for rl in lists:
        rank = rl.rank_of_relevant()
        if rank is not None and rank <= RANK_CUTOFF:
            total += 1.0 / rank
    return total / len(lists)


def ndcg_at_10(lists: Sequence[RankedList]) -> float:
    if not lists:
        raise EmptyEvalInput("no ranked lists")
    total = 0.0
    for rl in lists:
        rank = rl.rank_of_relevant()
        if rank is not None and rank <= RANK_CUTOFF:
            total += 1.0 / math.log2(rank + 1)  # IDCG = 1 for one relevant item
    return total / len(lists)


# --- table recall / F1 ---------------------------------------------------------------

def parse_linear_table(text: str) -> tuple[list[str], list[list[str]]]:
    """Parse the pipe-separated table format back into header + rows."""
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise ParseError("table text is empty")
    header = [cell.strip() for cell in lines[0].split("|")]
    if any(not cell for cell in header):
        raise ParseError("table header has empty cells")
    rows = []
    for i, line in enumerate(lines[1:], start=1):
        cells = [cell.strip() for cell in line.split("|")]
        if len(cells) != len(header):
            raise ParseError(f"row {i} has {len(cells)} cells, header has {len(header)}")
        rows.append(cells)
    return header, rows


def _table_triples(text: str) -> list[tuple[str, str, str]]:
    """(row key, column header, value) per cell; the first cell keys its row."""
    header, rows = parse_linear_table(text)
    triples = []
    for row in rows:
        key = row[0]
        for col_name, value in zip(header, row):
            triples.append((key, col_name, value))
    return triples


def _fold(text: str) -> str:
    return text.strip().casefold()


def _parse_float(text: str) -> Optional[float]:
    try:
        value = float(text.strip().replace(",", ""))
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def values_match(pred: str, gold: str, rel_tol: float = DEFAULT_REL_TOL) -> bool:
    """Numeric cells match within relative tolerance, others after fold+trim."""
    p_num, g_num = _parse_float(pred), _parse_float(gold)
    if p_num is not None and g_num is not None:
        return abs(p_num - g_num) <= rel_tol * max(abs(g_num), REL_TOL_EPS)
    return _fold(pred) == _fold(gold)


def table_recall_f1(pred: str, gold: str,
                    rel_tol: float = DEFAULT_REL_TOL) -> tuple[float, float, float]:
    """Triple-level matching of predicted vs gold table text."""
    pred_triples = _table_triples(pred)
    gold_triples = _table_triples(gold)

    unmatched = list(gold_triples)
    matches = 0
    for p_key, p_col, p_val in pred_triples:
        for i, (g_key, g_col, g_val) in enumerate(unmatched):
            if (_fold(p_key) == _fold(g_key) and _fold(p_col) == _fold(g_col)
                    and values_match(p_val, g_val, rel_tol)):
                matches += 1
                del unmatched[i]
                break

    recall = matches / len(gold_triples) if gold_triples else 1.0
    precision = matches / len(pred_triples) if pred_triples else 1.0
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return recall, precision, f1


# --- ROUGE ------------------------------------------------------------------------

def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; everything else separates."""
    out = []
    word = []
    for ch in text.lower():
        if ch.isalnum():
            word.append(ch)
        elif word:
            out.append("".join(word))
            word = []
    if word:
        out.append("".join(word))
    return out


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def rouge_n(pred: str, ref: str, n: int) -> float:
    """Clipped n-gram overlap, reported as F1."""
    pred_tokens, ref_tokens = tokenize(pred), tokenize(ref)
    pred_grams = Counter(tuple(pred_tokens[i:i + n])
                         for i in range(len(pred_tokens) - n + 1))
    ref_grams = Counter(tuple(ref_tokens[i:i + n])
                        for i in range(len(ref_tokens) - n + 1))
    if not pred_grams or not ref_grams:
        return 0.0
    overlap = sum((pred_grams & ref_grams).values())
    return _f1(overlap / sum(pred_grams.values()), overlap / sum(ref_grams.values()))


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[-1]))
        prev = current
    return prev[-1]


def rouge_l(pred: str, ref: str) -> float:
    """Longest-common-subsequence overlap, reported as F1."""
    pred_tokens, ref_tokens = tokenize(pred), tokenize(ref)
    if not pred_tokens or not ref_tokens:
        return 0.0
    lcs = _lcs_length(pred_tokens, ref_tokens)
    return _f1(lcs / len(pred_tokens), lcs / len(ref_tokens))


# --- METEOR -----------------------------------------------------------------------

def _align_chunks(pred_tokens: list[str], ref_tokens: list[str]) -> tuple[int, int]:
    """(matches, chunks) under exact unigram alignment.

    Repeatedly takes the longest common block of still-unmatched tokens
    (leftmost in pred, then in ref, on ties). Every common token ends up
    matched, so matches always reach the per-token min-count maximum; the
    block-first order keeps the chunk count at or near its minimum.
    """
    pred_free = [True] * len(pred_tokens)
    ref_free = [True] * len(ref_tokens)
    matches = 0
    chunks = 0
    while True:
        best_len = 0
        best: Optional[tuple[int, int]] = None
        for i in range(len(pred_tokens)):
            for j in range(len(ref_tokens)):
                length = 0
                while (i + length < len(pred_tokens) and j + length < len(ref_tokens)
                       and pred_free[i + length] and ref_free[j + length]
                       and pred_tokens[i + length] == ref_tokens[j + length]):
                    length += 1
                if length > best_len:
                    best_len = length
                    best = (i, j)
        if best is None:
            break
        i, j = best
        for offset in range(best_len):
            pred_free[i + offset] = False
            ref_free[j + offset] = False
        matches += best_len
        chunks += 1
    return matches, chunks


def meteor(pred: str, ref: str) -> float:
    """Exact-match METEOR: harmonic mean weighted to recall, chunk penalty."""
    pred_tokens, ref_tokens = tokenize(pred), tokenize(ref)
    if not pred_tokens or not ref_tokens:
        return 0.0
    matches, chunks = _align_chunks(pred_tokens, ref_tokens)
    if matches == 0:
        return 0.0
    precision = matches / len(pred_tokens)
    recall = matches / len(ref_tokens)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (chunks / matches) ** 3
    return f_mean * (1 - penalty)


# --- relaxed accuracy ----------------------------------------------------------------

def relaxed_accuracy(pred: str, gold: str, rel_tol: float = DEFAULT_REL_TOL) -> bool:
    """Numeric answers within tolerance, or case-insensitive string equality."""
    return values_match(pred, gold, rel_tol)


# --- aggregation ---------------------------------------------------------------------

@dataclass
class EvalReport:
    metrics: dict[str, float]
    count: int
    config: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        for name, value in self.metrics.items():
            if not math.isfinite(value):
                raise ValueError(f"metric {name} is not finite: {value}")
        if self.count <= 0:
            raise ValueError("report over zero examples")
        return {"metrics": self.metrics, "count": self.count, "config": self.config}


def evaluate_retrieval(lists: Sequence[RankedList],
                       ks: Sequence[int] = (1, 5, 10)) -> EvalReport:
    metrics = {f"recall@{k}": recall_at_k(lists, k) for k in ks}
    metrics["mrr@10"] = mrr_at_10(lists)
    metrics["ndcg@10"] = ndcg_at_10(lists)
    return EvalReport(metrics=metrics, count=len(lists),
                      config={"k_values": list(ks), "cutoff": RANK_CUTOFF})


def evaluate_text(pairs: Sequence[tuple[str, str]]) -> EvalReport:
    """Mean ROUGE-1/2/L and METEOR over (prediction, reference) pairs."""
    if not pairs:
        raise EmptyEvalInput("no prediction/reference pairs")
    n = len(pairs)
    metrics = {
        "rouge_1": math.fsum(rouge_n(p, r, 1) for p, r in pairs) / n,
        "rouge_2": math.fsum(rouge_n(p, r, 2) for p, r in pairs) / n,
        "rouge_l": math.fsum(rouge_l(p, r) for p, r in pairs) / n,
        "meteor": math.fsum(meteor(p, r) for p, r in pairs) / n,
    }
    return EvalReport(metrics=metrics, count=n, config={})


def evaluate_tables(pairs: Sequence[tuple[str, str]],
                    rel_tol: float = DEFAULT_REL_TOL) -> EvalReport:
    if not pairs:
        raise EmptyEvalInput("no prediction/gold table pairs")
    n = len(pairs)
    scores = [table_recall_f1(p, g, rel_tol) for p, g in pairs]
    metrics = {
        "recall": math.fsum(s[0] for s in scores) / n,
        "precision": math.fsum(s[1] for s in scores) / n,
        "f1": math.fsum(s[2] for s in scores) / n,
    }
    return EvalReport(metrics=metrics, count=n, config={"rel_tol": rel_tol})


def evaluate_qa(pairs: Sequence[tuple[str, str]],
                rel_tol: float = DEFAULT_REL_TOL) -> EvalReport:
    if not pairs:
        raise EmptyEvalInput("no prediction/gold answer pairs")
    hits = sum(1 for p, g in pairs if relaxed_accuracy(p, g, rel_tol))
    return EvalReport(metrics={"accuracy": 100.0 * hits / len(pairs)},
                      count=len(pairs), config={"rel_tol": rel_tol})
