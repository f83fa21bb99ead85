from pathlib import Path

import pytest

from pressbox.corpus import load_games

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_games(DATA_DIR / "fixture_games.jsonl")


@pytest.fixture(scope="session")
def stats_corpus():
    return load_games(DATA_DIR / "stats_fixture.jsonl")


@pytest.fixture(scope="session")
def fixture_path():
    return DATA_DIR / "fixture_games.jsonl"
