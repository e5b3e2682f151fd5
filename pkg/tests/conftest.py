"""Shared test helpers plus the acceptance-criteria summary.

Any test named test_criterion_NN* contributes to a per-criterion PASS/FAIL
line printed after the run; a criterion passes only if every test carrying
its number passed.
"""

import random
import re

import pytest

_CRITERION = re.compile(r"::test_criterion_(\d{2})")
_outcomes: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    key = m.group(1)
    if report.when == "call":
        _outcomes[key] = _outcomes.get(key, True) and report.outcome == "passed"
    elif report.outcome == "failed":
        _outcomes[key] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_outcomes):
        verdict = "PASS" if _outcomes[key] else "FAIL"
        terminalreporter.write_line(f"CRITERION {key}: {verdict}")


def random_counts(rnd: random.Random, max_users: int = 8, max_count: int = 12):
    return [rnd.randint(1, max_count) for _ in range(rnd.randint(1, max_users))]


def random_retention(rnd: random.Random, counts):
    while True:
        gammas = [rnd.randint(0, m) for m in counts]
        if sum(gammas) > 0:
            return gammas


@pytest.fixture
def tiny_dataset_text():
    return (
        "user,grid,value\n"
        "u1,g1,1.0\n"
        "u1,g1,2.0\n"
        "u2,g1,3.0\n"
        "u1,g2,0.5\n"
        "u3,g2,4.0\n"
    )
