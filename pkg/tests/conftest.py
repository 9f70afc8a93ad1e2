from __future__ import annotations

import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``criterion(n, title, ok, detail)`` records one pass/fail line and
    fails the test when ``ok`` is false."""
    def report(n: int, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  [{n:2d}] {title}: {detail}"
        _LINES[n] = line
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
