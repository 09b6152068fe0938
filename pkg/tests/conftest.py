import json
import os
import sys
from pathlib import Path

import pytest

# Ensure the qkl package is importable whether pytest is run from repo root or tests/
REPO_DIR = Path(__file__).resolve().parents[1]
if str(REPO_DIR) not in sys.path:
    sys.path.insert(0, str(REPO_DIR))

FIXTURE_CSV = REPO_DIR / "tests" / "fixtures" / "stars_50.csv"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs on the full catalogue; needs QKL_DATASET")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("QKL_DATASET"):
        return
    skip = pytest.mark.skip(reason="set QKL_DATASET to the full star catalogue to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def fixture_csv() -> Path:
    return FIXTURE_CSV


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(1234)


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config JSON pointing at the fixture; returns its path."""

    def _write(**fields) -> Path:
        doc = {
            "dataset_path": str(FIXTURE_CSV),
            "output_dir": str(tmp_path / "out"),
            "train_size": 30,
            "train_sizes": [10, 20],
            "min_class_count": 5,
            "svm": {"C": 100.0},
            "bench": {"size": 12, "workers": [1, 2], "repeats": 1},
        }
        doc.update(fields)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    return _write
