"""Small shared helpers: number formatting, hashing, atomic file writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator


def fmt_num(value: float) -> str:
    """Render a number with at most 6 significant digits, trailing zeros trimmed.

    Integral values render without a decimal point ("2", not "2.0"), so the
    same function serves emitted code, linearized tables, and QA answers.
    """
    if isinstance(value, int):
        return str(value)
    if value != value:  # NaN guard; should not reach emitted output
        return "nan"
    text = f"{value:.6g}"
    if text.endswith(".0"):
        text = text[:-2]
    # 1e+06 style from %g: keep it, it round-trips and stays short
    return text


def num_for_json(value: float) -> float | int:
    """Round-trip a float through fmt_num so emitted JSON carries <=6 sig digits."""
    if isinstance(value, int):
        return value
    rounded = float(fmt_num(value))
    return int(rounded) if rounded.is_integer() and abs(rounded) < 1e15 else rounded


def stable_id(*parts: str, length: int = 12) -> str:
    """Deterministic hex id from string parts."""
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()
    return digest[:length]


def write_atomic(path: str | Path, text: str) -> None:
    """Write text to path via a temp file + rename so readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json_line(record: dict[str, Any]) -> str:
    """One JSONL line with sorted keys; the store's canonical serialization."""
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    lines = [dump_json_line(r) for r in records]
    write_atomic(path, "".join(line + "\n" for line in lines))
    return len(lines)


def read_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)
