from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "hcm", max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("hcm")

LAST = "test_acceptance.py::test_criterion_8"


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: randomized property test (hypothesis)")
    config.hcm_invariants = {"collected": [], "outcomes": {}}


@pytest.hookimpl(tryfirst=True)
def pytest_collection_modifyitems(config, items):
    for item in items:
        fn = getattr(item, "function", None)
        if getattr(fn, "is_hypothesis_test", False):
            item.add_marker(pytest.mark.invariant)
            config.hcm_invariants["collected"].append(item.nodeid)
    # the invariant summary reads outcomes recorded earlier in the session
    items.sort(key=lambda it: LAST in it.nodeid)


def pytest_runtest_logreport(report):
    if "invariant" not in report.keywords:
        return

    store = _STORE.get("inv")
    if store is None:
        return
    if report.when == "call" or report.failed:
        prev = store["outcomes"].get(report.nodeid)
        if prev != "failed":
            store["outcomes"][report.nodeid] = report.outcome


_STORE: dict = {}


@pytest.hookimpl(tryfirst=True)
def pytest_sessionstart(session):
    _STORE["inv"] = session.config.hcm_invariants


@pytest.fixture
def invariant_record(request):
    return request.config.hcm_invariants
