import pytest

# (criterion number, passed, detail) appended by the acceptance tests
ACCEPTANCE_RESULTS = []


@pytest.fixture
def verdict():
    def record(number, passed, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_RESULTS.append((number, passed, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
