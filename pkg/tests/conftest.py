"""Shared hooks: acceptance tests register one status line per criterion,
printed in the terminal summary so they survive output capture."""

import pytest

CRITERIA = {}


@pytest.fixture
def criterion():
    def record(number, title, passed, detail, seconds):
        status = "PASS" if passed else "FAIL"
        CRITERIA[number] = f"criterion {number:>2} {status}  {title}: {detail} [{seconds:.1f} s]"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
