"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""
from collections import defaultdict

import pytest

CRITERIA = {
    1: "grid cardinalities",
    2: "gradient correctness",
    3: "optimizer sanity",
    4: "oracle conservation",
    5: "surrogate quality",
    6: "architecture fidelity",
    7: "search improvement",
    8: "ranking invariances",
    9: "metric units",
    10: "repeat-run interpolation",
}

_outcomes = defaultdict(list)
_notes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number covered by the test")


@pytest.fixture
def note(request):
    """Attach a line of measured values to the test's acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        if marker is not None:
            _notes[marker.args[0]].append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[marker.args[0]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status:7s} {title}")
        for text in _notes.get(n, []):
            terminalreporter.write_line(f"             {text}")
