import pytest

from shardledger.contracts import default_registry

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture
def report():
    """Record one acceptance line; all lines are printed at the end of the run."""
    def add(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
