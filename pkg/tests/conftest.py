import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA = {
    1: "general chain matches the single-bounce closed-form kernel",
    2: "pointwise port probabilities sum to one",
    3: "entrainment sequence 3/4, 5/6, 7/8",
    4: "unbiased first photon in the washout regime",
    5: "washout thresholds at 6 and 18 sigma, ratio 3",
    6: "imprint period lambda/4N",
    7: "imperfect-mirror persistence",
    8: "history weights sum to one",
    9: "Monte Carlo matches exact weights, thread-independent",
    10: "robustness to displacement, boost and thermal mixing",
    11: "minimum photon delay value",
}

_results: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.failed:
        _results.setdefault(marker.args[0], []).append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        runs = _results[number]
        ok = all(outcome == "passed" for _, outcome in runs)
        failed = [name for name, outcome in runs if outcome != "passed"]
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {CRITERIA.get(number, '')}"
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        terminalreporter.write_line(line)
