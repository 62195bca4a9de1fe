"""Shared pytest wiring: per-criterion pass/fail lines for the acceptance suite."""

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): top-level acceptance criterion, reported by name"
    )
    config._acceptance_results = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    entry = getattr(report, "_acceptance_name", None)
    if entry:
        results = getattr(pytest, "_acceptance_store", None)
        if results is not None:
            results[entry] = report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker:
        report._acceptance_name = marker.args[0]


def pytest_sessionstart(session):
    pytest._acceptance_store = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(pytest, "_acceptance_store", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in results.items():
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
