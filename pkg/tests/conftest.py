from pathlib import Path

import pytest

from contextuality.scenario import load_model

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "contextuality" / "fixtures"

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(code, title): one acceptance criterion")


@pytest.fixture
def fixture_model():
    def load(name, exact=False):
        return load_model(FIXTURES / name, exact=exact)
    return load


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    mark = report.user_properties and dict(report.user_properties).get("acceptance")
    if not mark:
        return
    code, title = mark
    ok, _ = _ACCEPTANCE.get(code, (True, title))
    _ACCEPTANCE[code] = (ok and report.passed, title)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            item.user_properties.append(("acceptance", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(_ACCEPTANCE, key=lambda c: int(c[2:])):
        ok, title = _ACCEPTANCE[code]
        terminalreporter.write_line(f"{code:<5} {'PASS' if ok else 'FAIL'}  {title}")
