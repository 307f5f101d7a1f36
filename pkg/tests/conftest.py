from __future__ import annotations

import json

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qvf",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qvf")


@pytest.fixture
def run_cli():
    """Run the CLI in-process; returns ``(exit_code, parsed_json, raw_text)``."""
    from qvf.cli import dumps, run

    def _run(*argv):
        code, doc = run(list(argv))
        text = dumps(doc)
        return code, json.loads(text), text

    return _run


# ----------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion
# ----------------------------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n, title = mark.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if rep.failed or n not in _CRITERIA:
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA[n] = (f"criterion {n} [{title}]: {status}", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        line, detail = _CRITERIA[n]
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
