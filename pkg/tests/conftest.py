import pytest


def pytest_configure(config):
    config._criteria_lines = {}


@pytest.fixture
def report(request):
    """Record the one-line verdict of an acceptance criterion."""
    lines = request.config._criteria_lines

    def record(n: int, passed: bool, detail: str) -> bool:
        line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[n] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criteria_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
