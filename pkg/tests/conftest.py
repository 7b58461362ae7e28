from pathlib import Path

import pytest

from matcheck.library import load_library

DEMO_DIR = Path(__file__).resolve().parent.parent / "demo"


@pytest.fixture(scope="session")
def demo_dir() -> Path:
    return DEMO_DIR


@pytest.fixture(scope="session")
def demo_library():
    blocks, notices = load_library([DEMO_DIR / "blocks"])
    assert not notices
    return blocks
