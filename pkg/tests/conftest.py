from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(tag: str, ok: bool, detail: str) -> None:
        line = f"[{tag:>3}] {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES, key=_order):
        terminalreporter.write_line(line)


def _order(line: str):
    tag = line[1:4].strip()
    num = int("".join(ch for ch in tag if ch.isdigit()))
    return num, tag
