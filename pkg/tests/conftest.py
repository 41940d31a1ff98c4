import pytest

_ACCEPTANCE_LINES: list[tuple[int, str]] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line for an acceptance criterion and echo it."""
    def record(number: int, passed: bool, detail: str, seconds: float) -> None:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail} [{seconds:.2f} s]"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
