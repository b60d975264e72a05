import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def dilbert_dir() -> Path:
    return FIXTURES / "dilbert"


@pytest.fixture()
def runner():
    from click.testing import CliRunner

    return CliRunner()
