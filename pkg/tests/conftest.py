import pytest

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def record_criterion(request):
    """Record the outcome of a numbered acceptance criterion.

    Lines are printed by the test and repeated in the terminal summary.
    """

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.stash[_CRITERIA][number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
