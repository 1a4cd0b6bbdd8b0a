import time

import pytest

# acceptance results keyed by criterion name: (passed, detail)
ACCEPTANCE: dict = {}

SUITE_BUDGET = 300.0
_START = {}


def pytest_sessionstart(session):
    _START["t"] = time.perf_counter()


@pytest.fixture
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    name = "Property suite"
    if name in ACCEPTANCE:
        # the property criterion also bounds the wall time of the whole run
        elapsed = time.perf_counter() - _START["t"]
        ok, detail = ACCEPTANCE[name]
        ACCEPTANCE[name] = (ok and elapsed < SUITE_BUDGET, f"{detail}; session {elapsed:.0f}s (<{SUITE_BUDGET:.0f}s)")
    terminalreporter.section("acceptance criteria")
    for key, (ok, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
