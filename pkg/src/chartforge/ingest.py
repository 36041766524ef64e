"""CSV ingestion: parse raw tables, infer column kinds, apply cleaning rules.

Cleaning drops rows with missing cells, removes duplicate columns, and
rejects tables without numeric content; it never imputes values.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import IO, Iterable, Optional, Union

from .errors import EmptyInput, EncodingError, RaggedRow, TextOnly, TooFewRows

NUMERIC = "numeric"
TEMPORAL = "temporal"
CATEGORICAL = "categorical"

# Fraction of non-empty cells that must parse for a kind to be assigned.
KIND_THRESHOLD = 0.95

_NUMBER_RE = re.compile(r"^[+-]?(\d{1,3}(,\d{3})+|\d+)?(\.\d+)?([eE][+-]?\d+)?$")
_YEAR_RE = re.compile(r"^[12]\d{3}$")
_DATE_FORMATS = ("%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%Y-%m")


def parse_number(cell: str) -> Optional[float]:
    """Parse one cell as a real number, or None.

    Accepts sign, thousands separators, decimals, scientific notation, and a
    "%" suffix (divided by 100). Non-finite values are rejected.
    """
    text = cell.strip()
    if not text:
        return None
    percent = text.endswith("%")
    if percent:
        text = text[:-1].strip()
    if not _NUMBER_RE.match(text) or text in ("", "+", "-"):
        return None
    try:
        value = float(text.replace(",", ""))
    except ValueError:
        return None
    if value != value or value in (float("inf"), float("-inf")):
        return None
    return value / 100.0 if percent else value


def parse_temporal(cell: str) -> Optional[datetime]:
    """Parse one cell under the accepted date formats, or None."""
    text = cell.strip()
    if not text:
        return None
    if _YEAR_RE.match(text):
        return datetime(int(text), 1, 1)
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    return None


@dataclass
class RawTable:
    """Header plus rows of raw cell strings, all rows header-length."""

    source_id: str
    header: list[str]
    rows: list[list[str]]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column(self, index: int) -> list[str]:
        return [row[index] for row in self.rows]


@dataclass
class ColumnProfile:
    name: str
    kind: str
    distinct_count: int
    missing_count: int
    numeric_min: Optional[float] = None
    numeric_max: Optional[float] = None

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "kind": self.kind,
            "distinct_count": self.distinct_count,
            "missing_count": self.missing_count,
        }
        if self.kind == NUMERIC:
            data["numeric_min"] = self.numeric_min
            data["numeric_max"] = self.numeric_max
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnProfile":
        return cls(
            name=data["name"],
            kind=data["kind"],
            distinct_count=data["distinct_count"],
            missing_count=data["missing_count"],
            numeric_min=data.get("numeric_min"),
            numeric_max=data.get("numeric_max"),
        )


@dataclass
class CleanTable:
    """Typed, fully-populated table: floats in numeric columns, trimmed strings elsewhere."""

    source_id: str
    columns: list[tuple[ColumnProfile, list]]
    row_count: int
    cleaning_log: list[dict] = field(default_factory=list)

    @property
    def column_names(self) -> list[str]:
        return [profile.name for profile, _ in self.columns]

    def profile(self, name: str) -> ColumnProfile:
        for prof, _ in self.columns:
            if prof.name == name:
                return prof
        raise KeyError(name)

    def values(self, name: str) -> list:
        for prof, vals in self.columns:
            if prof.name == name:
                return vals
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "row_count": self.row_count,
            "cleaning_log": self.cleaning_log,
            "columns": [
                {"profile": prof.to_dict(), "values": vals} for prof, vals in self.columns
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CleanTable":
        return cls(
            source_id=data["source_id"],
            columns=[
                (ColumnProfile.from_dict(col["profile"]), list(col["values"]))
                for col in data["columns"]
            ],
            row_count=data["row_count"],
            cleaning_log=list(data["cleaning_log"]),
        )


def _unique_names(raw_names: list[str]) -> list[str]:
    """Trim header names; autofill empties and suffix duplicates with an ordinal."""
    names: list[str] = []
    seen: dict[str, int] = {}
    for i, raw in enumerate(raw_names):
        name = raw.strip() or f"column_{i + 1}"
        if name in seen:
            seen[name] += 1
            name = f"{name}_{seen[name]}"
        seen.setdefault(name, 1)
        names.append(name)
    return names


def parse_csv(stream: Union[str, IO[str]], source_id: str = "<memory>") -> RawTable:
    """Parse RFC-4180-style CSV text with a header row into a RawTable."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    try:
        reader = csv.reader(stream)
        try:
            header_cells = next(reader)
        except StopIteration:
            raise EmptyInput(f"{source_id}: no header row") from None
        rows = [row for row in reader if row]  # blank lines are not records
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{source_id}: {exc}") from exc
    header = _unique_names(header_cells)
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRow(
                f"{source_id}: row {i} has {len(row)} cells, header has {width}"
            )
    return RawTable(source_id=source_id, header=header, rows=rows)


def read_csv_file(path) -> RawTable:
    """Read a CSV file from disk, surfacing invalid UTF-8 as EncodingError."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            text = handle.read()
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: {exc}") from exc
    import os

    return parse_csv(text, source_id=os.path.splitext(os.path.basename(str(path)))[0])


def _profile_one(name: str, cells: Iterable[str]) -> ColumnProfile:
    trimmed = [c.strip() for c in cells]
    non_empty = [c for c in trimmed if c]
    missing = len(trimmed) - len(non_empty)
    distinct = len(set(non_empty))
    if not non_empty:
        return ColumnProfile(name, CATEGORICAL, distinct, missing)

    numbers = [parse_number(c) for c in non_empty]
    parsed_numbers = [n for n in numbers if n is not None]
    if len(parsed_numbers) / len(non_empty) >= KIND_THRESHOLD:
        return ColumnProfile(
            name,
            NUMERIC,
            distinct,
            missing,
            numeric_min=min(parsed_numbers),
            numeric_max=max(parsed_numbers),
        )

    parsed_dates = sum(1 for c in non_empty if parse_temporal(c) is not None)
    if parsed_dates / len(non_empty) >= KIND_THRESHOLD:
        return ColumnProfile(name, TEMPORAL, distinct, missing)

    return ColumnProfile(name, CATEGORICAL, distinct, missing)


def profile_columns(table: RawTable) -> list[ColumnProfile]:
    """Infer each column's kind and exact distinct/missing counts."""
    return [_profile_one(name, table.column(i)) for i, name in enumerate(table.header)]


def clean_table(table: RawTable) -> CleanTable:
    """Apply the cleaning rules: drop incomplete rows, dedupe columns, re-profile.

    Rows whose cells cannot be coerced to their column's inferred kind are
    dropped alongside missing-value rows, so every surviving cell is typed.
    """
    log: list[dict] = []

    # Rule 1: drop any row with an empty cell.
    kept_indices = []
    dropped = []
    for i, row in enumerate(table.rows):
        if any(not cell.strip() for cell in row):
            dropped.append(i)
        else:
            kept_indices.append(i)

    # Coercion pass, iterated to a fixed point: a numeric/temporal column may
    # carry <=5% stray cells; rows holding them are dropped so typed columns
    # stay total. Dropping rows can re-tilt kind ratios, hence the loop.
    while True:
        survivors = [table.rows[i] for i in kept_indices]
        profiles = [
            _profile_one(name, [row[j] for row in survivors])
            for j, name in enumerate(table.header)
        ]
        bad_local = []
        for local_i, row in enumerate(survivors):
            for j, prof in enumerate(profiles):
                if prof.kind == NUMERIC and parse_number(row[j]) is None:
                    bad_local.append(local_i)
                    break
                if prof.kind == TEMPORAL and parse_temporal(row[j]) is None:
                    bad_local.append(local_i)
                    break
        if not bad_local:
            break
        dropped.extend(kept_indices[i] for i in bad_local)
        kept_indices = [idx for i, idx in enumerate(kept_indices) if i not in set(bad_local)]

    if dropped:
        log.append({"action": "rows_dropped", "rows": sorted(dropped)})

    if len(survivors) < 2:
        raise TooFewRows(
            f"{table.source_id}: {len(survivors)} rows survive cleaning, need >= 2"
        )

    # Rule 2: of columns with identical post-drop value sequences, keep the
    # leftmost. Numeric columns compare by parsed value, so formatting-only
    # twins ("0" vs "0.000") collapse and cleaning stays idempotent.
    def column_key(j: int) -> tuple:
        cells = tuple(row[j].strip() for row in survivors)
        if profiles[j].kind == NUMERIC:
            return (NUMERIC, tuple(parse_number(c) for c in cells))
        return (profiles[j].kind, cells)

    seen_sequences: dict[tuple, str] = {}
    kept_cols = []
    deduped = []
    for j, name in enumerate(table.header):
        key = column_key(j)
        if key in seen_sequences:
            deduped.append({"dropped": name, "kept_as": seen_sequences[key]})
        else:
            seen_sequences[key] = name
            kept_cols.append(j)
    if deduped:
        log.append({"action": "columns_deduped", "columns": deduped})

    # Rule 3: type the surviving grid under the fixed-point profiles.
    columns: list[tuple[ColumnProfile, list]] = []
    has_numeric = False
    for j in kept_cols:
        cells = [row[j].strip() for row in survivors]
        prof = profiles[j]
        if prof.kind == NUMERIC:
            has_numeric = True
            values: list = [parse_number(c) for c in cells]
        else:
            values = cells
        columns.append((prof, values))

    if not has_numeric:
        raise TextOnly(f"{table.source_id}: no numeric column after cleaning")

    return CleanTable(
        source_id=table.source_id,
        columns=columns,
        row_count=len(survivors),
        cleaning_log=log,
    )
