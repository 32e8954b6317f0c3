"""Shared pytest plumbing.

Tests marked @pytest.mark.criterion("...") report into an "acceptance
criteria" section of the terminal summary, one PASS/FAIL line per shipped
guarantee, so a full run ends with a readable checklist.
"""

import pytest

_criterion_results = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): a shipped guarantee verified by this test"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        _criterion_results.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _criterion_results:
        terminalreporter.write_line(("PASS " if passed else "FAIL ") + name)
