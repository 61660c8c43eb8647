from __future__ import annotations

from collections import defaultdict

import pytest

_criteria: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


def pytest_runtest_logreport(report):
    marks = getattr(report, "criterion_ids", None)
    if not marks:
        return
    for k in marks:
        if report.when == "call" or report.outcome != "passed":
            _criteria[k].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criterion_ids = [m.args[0] for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        outcomes = _criteria[k]
        ok = outcomes and all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"Criterion {k}: {'PASS' if ok else 'FAIL'} ({len(outcomes)} checks)")
