import pytest

_RESULTS = []


class AcceptanceLog:
    def record(self, criterion, passed, detail):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {criterion}: {status}  {detail}"
        _RESULTS.append(line)
        print(line)
        return passed

    def info(self, label, detail):
        line = f"{label}: INFO  {detail}"
        _RESULTS.append(line)
        print(line)


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)
