# conftest.py
# Ensure the repository root is importable as a package root during pytest runs.
# This makes `import besselab` work regardless of how pytest determines rootdir.

import os
import pathlib
import sys

import pytest

# a small worker pool before any besselab import reads it
os.environ.setdefault("BESSELAB_THREADS", "2")

ROOT = pathlib.Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))  # <-- add repo root to Python path


@pytest.fixture
def out_dir(tmp_path):
    """Fresh output directory for CLI runs."""
    path = tmp_path / "run"
    path.mkdir()
    return path
