"""Shared fixtures and the acceptance-criterion report.

Acceptance tests carry ``@pytest.mark.acceptance(number, title)``; their
outcome is collected here and printed as one PASS/FAIL/SKIP line per
criterion at the end of the session.
"""

import pytest

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    number, title = marker.args[0], marker.args[1]
    if call.when == "setup" and call.excinfo is not None:
        status = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"
        _criteria[number] = (title, status)
    elif call.when == "call":
        if call.excinfo is None:
            status = "PASS"
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            status = "SKIP"
        else:
            status = "FAIL"
        # several tests may share a criterion: any failure wins, then any pass
        previous = _criteria.get(number, (title, None))[1]
        if previous == "FAIL" or (previous == "PASS" and status == "SKIP"):
            status = previous
        _criteria[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
