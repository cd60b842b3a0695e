"""Collects the acceptance verdicts and prints them after the run."""

import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """``verdict(tag, ok, detail)`` records one pass/fail line and returns ``ok``."""
    def record(tag: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"{tag:<4} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
