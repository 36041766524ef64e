import sys
from pathlib import Path

import pytest

from chartforge import ingest
from chartforge.config import PipelineConfig


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        sys.stderr.write(f"ACCEPTANCE {name}: {outcome}\n")

REPO_ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = REPO_ROOT / "sample_corpus"


def make_clean(csv_text: str, source_id: str = "t") -> ingest.CleanTable:
    return ingest.clean_table(ingest.parse_csv(csv_text, source_id))


@pytest.fixture
def monthly_sales() -> ingest.CleanTable:
    text = ("month,sales\n"
            "2021-01,10\n2021-02,12\n2021-03,15\n2021-04,11\n2021-05,18\n")
    return make_clean(text, "monthly_sales")


@pytest.fixture
def category_value() -> ingest.CleanTable:
    text = ("region,value,segment\n"
            "North,10,A\nSouth,20,B\nEast,15,A\nWest,25,B\nNorth,5,B\n")
    return make_clean(text, "category_value")


@pytest.fixture
def numeric_pair() -> ingest.CleanTable:
    text = "x,y,z\n1,2,5\n2,4,6\n3,6,2\n4,8,9\n5,10,1\n"
    return make_clean(text, "numeric_pair")


@pytest.fixture
def default_config() -> PipelineConfig:
    return PipelineConfig()


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    assert CORPUS_DIR.is_dir(), "bundled sample corpus missing"
    return CORPUS_DIR
