import pytest

from refinery.canonical import canonical_workspace


@pytest.fixture(scope="session")
def ws():
    return canonical_workspace()


@pytest.fixture(scope="session")
def ops(ws):
    return ws.operations


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in results.values():
        terminalreporter.write_line(line)
