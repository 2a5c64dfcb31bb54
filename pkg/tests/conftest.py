import pytest

# (criterion, passed, detail) rows filled by tests/test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def report():
    def _report(num, ok, detail):
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append((num, ok, line))
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, _, line in sorted(ACCEPTANCE, key=lambda r: r[0]):
            terminalreporter.write_line(line)
