import math

import pytest

from sshwaveguide.model import SystemParams

# lines collected by the acceptance module, echoed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fig4_params():
    return SystemParams(n_atoms=21, j0=8.0, phi=0.3 * math.pi, spacing=0.75, gamma0=0.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
