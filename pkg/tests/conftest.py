import os
from pathlib import Path

import pytest
import yaml

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Keeps stray PY_PROFILE_SPREADERS_* variables out of every test."""
    for name in list(os.environ):
        if name.upper().startswith("PY_PROFILE_SPREADERS_"):
            monkeypatch.delenv(name, raising=False)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixture_config(tmp_path: Path) -> Path:
    """A config.yaml pointing at the hand-written fixture corpus."""
    config = {
        "tweets_path": str(DATA_DIR / "tweets.jsonl"),
        "users_path": str(DATA_DIR / "users.jsonl"),
        "labels_path": str(DATA_DIR / "labels.csv"),
        "output_dir": str(tmp_path / "output"),
        "reference_now": "2021-03-01T00:00:00Z",
        "seed": 7,
    }
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path
