import pytest

# number -> (title, passed, detail); filled by the acceptance tests
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """``rec = criterion(n, title)`` opens a result line; ``rec(ok, detail)`` closes it."""

    def open_line(number, title):
        ACCEPTANCE[number] = (title, False, "did not complete")

        def close(ok, detail):
            ACCEPTANCE[number] = (title, bool(ok), detail)
            print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
            return bool(ok)

        return close

    return open_line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
