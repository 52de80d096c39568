"""Shared pytest plumbing.

The acceptance suite records one verdict line per criterion; printing them
from inside tests would be swallowed by output capture, so they are replayed
in the terminal summary where they stay visible on a plain ``pytest -v`` run.
"""

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
