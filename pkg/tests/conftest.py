import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    status = "PASS" if rep.passed else "FAIL"
    ACCEPTANCE.append((marker.args[0], status, item.name))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, name in sorted(ACCEPTANCE, key=lambda r: (r[0], r[2])):
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {name}")
