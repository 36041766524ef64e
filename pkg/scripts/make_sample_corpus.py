#!/usr/bin/env python3
"""Regenerate the bundled 50-table sample corpus.

The corpus is deterministic (fixed seed) and mixes table shapes so every
chart type is reachable: monthly series, category/value pairs with and
without a grouping column, numeric pairs and triples, two-category grids,
single-measure distributions, and a few deliberately messy files (missing
cells, duplicate columns, percent and thousands-separated numbers).
"""

from __future__ import annotations

import argparse
import csv
import random
from pathlib import Path

CATEGORIES = {
    "product": ["Laptop", "Phone", "Tablet", "Monitor", "Camera", "Printer",
                "Router", "Speaker", "Keyboard", "Headset"],
    "region": ["North", "South", "East", "West", "Central"],
    "department": ["Sales", "Engineering", "Support", "Marketing", "Finance",
                   "Operations"],
    "material": ["Steel", "Aluminum", "Copper", "Plastic", "Glass", "Carbon",
                 "Titanium"],
    "city": ["Oslo", "Lima", "Cairo", "Perth", "Quito", "Hanoi", "Turin",
             "Kyoto"],
}

MEASURES = ["sales", "revenue", "units", "cost", "score", "output", "visits",
            "weight", "rating", "demand"]


def _series(rng: random.Random, n: int, base: float, drift: float,
            noise: float) -> list[float]:
    return [round(base + drift * i + rng.uniform(-noise, noise), 2)
            for i in range(n)]


def monthly_table(rng: random.Random, two_measures: bool) -> tuple[list[str], list[list[str]]]:
    n = rng.randint(12, 24)
    year = rng.randint(2015, 2022)
    months = [f"{year + (m // 12)}-{(m % 12) + 1:02d}" for m in range(n)]
    m1, m2 = rng.sample(MEASURES, 2)
    v1 = _series(rng, n, rng.uniform(50, 500), rng.uniform(-8, 12), rng.uniform(2, 20))
    header = ["month", m1]
    rows = [[months[i], str(v1[i])] for i in range(n)]
    if two_measures:
        v2 = _series(rng, n, rng.uniform(10, 80), rng.uniform(-2, 3), rng.uniform(1, 6))
        header.append(m2)
        for i, row in enumerate(rows):
            row.append(str(v2[i]))
    return header, rows


def category_table(rng: random.Random, with_series: bool) -> tuple[list[str], list[list[str]]]:
    cat_name = rng.choice(list(CATEGORIES))
    values = rng.sample(CATEGORIES[cat_name], rng.randint(4, min(8, len(CATEGORIES[cat_name]))))
    measure = rng.choice(MEASURES)
    header = [cat_name, measure]
    rows = []
    if with_series:
        series_name = rng.choice([k for k in CATEGORIES if k != cat_name])
        series_values = rng.sample(CATEGORIES[series_name], rng.randint(2, 4))
        header = [cat_name, measure, series_name]
        for cat in values:
            for sv in series_values:
                rows.append([cat, str(round(rng.uniform(5, 400), 1)), sv])
    else:
        repeats = rng.choice([1, 1, 2])  # some tables carry duplicate keys
        for _ in range(repeats):
            for cat in values:
                rows.append([cat, str(round(rng.uniform(5, 400), 1))])
    return header, rows


def numeric_table(rng: random.Random, three: bool) -> tuple[list[str], list[list[str]]]:
    n = rng.randint(18, 36)
    m = rng.sample(MEASURES, 3 if three else 2)
    slope = rng.uniform(-2.5, 2.5)
    xs = [round(rng.uniform(0, 100), 2) for _ in range(n)]
    ys = [round(40 + slope * x + rng.uniform(-25, 25), 2) for x in xs]
    header = m[:2]
    rows = [[str(xs[i]), str(ys[i])] for i in range(n)]
    if three:
        zs = [round(rng.uniform(1, 50), 2) for _ in range(n)]
        header.append(m[2])
        for i, row in enumerate(rows):
            row.append(str(zs[i]))
    return header, rows


def grid_table(rng: random.Random) -> tuple[list[str], list[list[str]]]:
    cat_a, cat_b = rng.sample(list(CATEGORIES), 2)
    a_values = rng.sample(CATEGORIES[cat_a], rng.randint(3, 5))
    b_values = rng.sample(CATEGORIES[cat_b], rng.randint(3, 4))
    measure = rng.choice(MEASURES)
    rows = []
    for a in a_values:
        for b in b_values:
            for _ in range(rng.choice([1, 1, 2])):
                rows.append([a, b, str(round(rng.uniform(1, 120), 1))])
    return [cat_a, cat_b, measure], rows


def distribution_table(rng: random.Random) -> tuple[list[str], list[list[str]]]:
    n = rng.randint(30, 50)
    measure = rng.choice(MEASURES)
    center = rng.uniform(20, 200)
    values = [round(rng.gauss(center, center / 6), 2) for _ in range(n)]
    # a couple of heavy points so outlier detection has something to find
    values[rng.randrange(n)] = round(center * rng.uniform(2.5, 4.0), 2)
    header = ["sample_id", measure]
    rows = [[f"s{i:03d}", str(values[i])] for i in range(n)]
    return header, rows


def messy_table(rng: random.Random, variant: int) -> tuple[list[str], list[list[str]]]:
    header, rows = monthly_table(rng, two_measures=True)
    if variant % 4 == 0:
        # missing cells in a few rows
        for _ in range(3):
            rows[rng.randrange(len(rows))][rng.randrange(1, len(header))] = ""
    if variant % 4 == 1:
        # duplicate column with identical data
        header.append(header[1] + "_copy")
        for row in rows:
            row.append(row[1])
    if variant % 4 == 2:
        # thousands separators and a percent column
        header.append("share")
        for row in rows:
            row[1] = f"{float(row[1]) * 1000:,.0f}"
            row.append(f"{rng.uniform(1, 99):.1f}%")
    if variant % 4 == 3:
        # alternative date format plus a stray unparseable cell
        for row in rows:
            y, m = row[0].split("-")
            row[0] = f"{y}/{m}/15"
        rows[rng.randrange(len(rows))][1] = "n/a"
    return header, rows


def build_corpus(out_dir: Path, seed: int) -> list[Path]:
    rng = random.Random(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan = (
        [("monthly", dict(two_measures=False))] * 6
        + [("monthly", dict(two_measures=True))] * 6
        + [("category", dict(with_series=False))] * 6
        + [("category", dict(with_series=True))] * 6
        + [("numeric", dict(three=False))] * 4
        + [("numeric", dict(three=True))] * 4
        + [("grid", {})] * 6
        + [("distribution", {})] * 6
        + [("messy", {})] * 6
    )
    builders = {
        "monthly": monthly_table,
        "category": category_table,
        "numeric": numeric_table,
        "grid": grid_table,
        "distribution": distribution_table,
    }
    paths = []
    for i, (kind, kwargs) in enumerate(plan):
        if kind == "messy":
            header, rows = messy_table(rng, i)
        else:
            header, rows = builders[kind](rng, **kwargs)
        path = out_dir / f"{kind}_{i:02d}.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
        paths.append(path)
    return paths


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="sample_corpus")
    parser.add_argument("--seed", type=int, default=20240817)
    args = parser.parse_args()
    paths = build_corpus(Path(args.out), args.seed)
    print(f"wrote {len(paths)} tables to {args.out}/")


if __name__ == "__main__":
    main()
