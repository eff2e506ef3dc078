import pytest

ACCEPTANCE_RESULTS = []


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}: {detail}")
