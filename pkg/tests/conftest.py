import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpusgen import generate_corpus  # noqa: E402

from soliclone.pipeline import load_corpus  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixture_corpus_root() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def manifest() -> dict:
    return json.loads((FIXTURES / "manifest.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def fixture_index(fixture_corpus_root):
    # the hand-written fixtures use small functions; 3-line floor keeps them
    return load_corpus(fixture_corpus_root, min_lines=3, max_lines=2500)


@pytest.fixture(scope="session")
def synth_corpus(tmp_path_factory):
    """~120 files, >= 200 fragments, seeded exact-duplicate families."""
    root = tmp_path_factory.mktemp("synth_corpus")
    return generate_corpus(root, n_files=120, seed=42, n_families=25,
                           copies_low=3, copies_high=5)


@pytest.fixture(scope="session")
def synth_index(synth_corpus):
    return load_corpus(synth_corpus.root, min_lines=10, max_lines=2500)
