import os
import sys
from collections import defaultdict

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for reference_rate

CRITERIA = {
    1: "CHSH formula and tolerable error rate",
    2: "coincidence formula vs first-principles circuit",
    3: "beam-splitting attack vs first-principles circuit",
    4: "key-rate reproduction and curve trends",
    5: "sqrt(eta) scaling of the rate",
    6: "Monte Carlo consistency and determinism",
    7: "invariant suite (1000 randomized cases each)",
}

_results = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _results[marker.args[0]].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        checks = _results[n]
        ok = all(p for _, p in checks)
        failed = [name for name, p in checks if not p]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {CRITERIA.get(n, '')} ({len(checks)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        terminalreporter.write_line(line)
