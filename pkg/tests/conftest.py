import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from covmdp.population import power_law_profile  # noqa: E402


@pytest.fixture(scope="session")
def power_law_b2():
    """The b = 2 power law used throughout the acceptance checks."""
    return power_law_profile(1.0, 2.0, 1e-6)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
