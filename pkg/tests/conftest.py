from __future__ import annotations

import pytest

from switchsim.quantizer import greedy_quantize

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    # Load/compile the numba kernel once so timed tests measure steady state.
    greedy_quantize([(0.0, 0.0), (0.1, 0.0)], (0, 0), 10)


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
