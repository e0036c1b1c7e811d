"""
Pytest configuration for refgraph tests.
"""

import sys
from pathlib import Path

import pytest

# Add src to path
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

ENV_VARS = (
    "REFGRAPH_TMPDIR",
    "REFGRAPH_WORKERS",
    "REFGRAPH_CODEC",
    "REFGRAPH_MEMORY",
    "REFGRAPH_WORKDIR",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep REFGRAPH_* settings of the calling shell out of the tests."""
    for key in ENV_VARS:
        monkeypatch.delenv(key, raising=False)
