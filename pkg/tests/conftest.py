import sys
from pathlib import Path

import pytest

# Make the sibling helper modules importable regardless of rootdir.
sys.path.insert(0, str(Path(__file__).parent))

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def action_cache_path() -> Path:
    return DATA_DIR / "action_hits_cache.tsv"


@pytest.fixture(scope="session")
def mini_corpus_path() -> Path:
    return DATA_DIR / "mini" / "corpus.jsonl"


@pytest.fixture(scope="session")
def mini_cache_path() -> Path:
    return DATA_DIR / "mini" / "hits_cache.tsv"
