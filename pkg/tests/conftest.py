import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; the lines are
    printed as they are produced and repeated in the terminal summary."""
    def record(criterion: str, passed: bool, detail: str) -> bool:
        line = f"{criterion}: {'PASS' if passed else 'FAIL'} -- {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
