import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]

# filled by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def data_dir() -> Path:
    return ROOT / "data"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
