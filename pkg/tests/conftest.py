from __future__ import annotations

from pathlib import Path

import pytest

from jobsift.config import data_path
from jobsift.corpus import ingest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def sample_dir() -> Path:
    return data_path("sample")


@pytest.fixture(scope="session")
def sample_records(sample_dir: Path):
    return ingest(sample_dir / "corpus.jsonl").records


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
