"""Acceptance bookkeeping: one PASS/FAIL line per criterion at the end of the run."""

import pytest

_results = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.stash[_results] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    results = item.config.stash[_results]
    _, passed, seconds = results.get(number, (title, True, 0.0))
    if report.when == "call":
        seconds += report.duration
    if report.failed:
        passed = False
    results[number] = (title, passed, seconds)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_results]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, seconds = results[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {verdict}  {title} ({seconds:.2f}s)")
