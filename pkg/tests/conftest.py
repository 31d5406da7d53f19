"""Shared fixtures: acceptance-verdict recording with an uncaptured replay.

The acceptance tests print one PASS/FAIL line per criterion.  Output
written during a test is swallowed by pytest's capture, so the lines are
also collected here and replayed in the terminal summary.
"""

import pytest

_VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def verdict():
    def record(num: int, ok: bool, label: str, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        line = f"[criterion {num:02d}] {status}  {label}"
        if detail:
            line += f"  ({detail})"
        print(line)
        _VERDICTS.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
