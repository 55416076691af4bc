from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from raagkit import free_abelian, free_group, z2_free_z

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def F2():
    return free_group(2)


@pytest.fixture(scope="session")
def Z2():
    return free_abelian(2)


@pytest.fixture(scope="session")
def Z3():
    return free_abelian(3)


@pytest.fixture(scope="session")
def G3():
    """ℤ²∗ℤ: a and b commute, c is free."""
    return z2_free_z()


# --- acceptance report -----------------------------------------------------------------------
# tests named test_criterion_NN_* record a detail line; the outcome comes from pytest itself

_ACCEPTANCE_DETAIL: dict = {}
_ACCEPTANCE_OUTCOME: dict = {}


def _criterion(nodeid: str) -> int | None:
    name = nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return None
    return int(name.split("_")[2])


@pytest.fixture
def acceptance(request):
    """``acceptance(title, detail)`` attaches a one-line summary to the current criterion."""
    number = _criterion(request.node.nodeid)

    def record(title: str, detail: str) -> None:
        _ACCEPTANCE_DETAIL[number] = (title, detail)
        print(f"criterion {number:2d} {title}: {detail}")

    return record


def pytest_runtest_logreport(report):
    number = _criterion(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.failed:
        prev = _ACCEPTANCE_OUTCOME.get(number)
        if prev != "FAIL":
            _ACCEPTANCE_OUTCOME[number] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOME:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE_OUTCOME):
        title, detail = _ACCEPTANCE_DETAIL.get(number, ("", "no result recorded"))
        terminalreporter.write_line(f"{_ACCEPTANCE_OUTCOME[number]}  criterion {number:2d}  {title}: {detail}")
