"""Shared pytest plumbing: the acceptance suite records one line per
criterion and the terminal summary replays them after the test report."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Recorder for acceptance criteria: logs a PASS/FAIL line, then asserts."""
    def record(name, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
