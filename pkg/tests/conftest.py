"""Shared test infrastructure: the acceptance criteria report.

Acceptance tests record one line per criterion; the collected table is
printed after the run so it is visible regardless of output capture.
"""

_ACCEPTANCE_LINES = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] {name}"
    if detail:
        line += f" - {detail}"
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
