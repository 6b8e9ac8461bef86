import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

REAL_DATA = os.environ.get("HRVSEPSIS_DATA")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def requires_real_data():
    return pytest.mark.skipif(not REAL_DATA or not os.path.exists(REAL_DATA),
                              reason="set HRVSEPSIS_DATA to the HRV dataset CSV")


# ---------------------------------------------------------------- acceptance summary
# Tests tagged ``@pytest.mark.criterion(n, text)`` report into one line per
# criterion: PASS if every tagged test passed, FAIL if any failed, SKIP if all
# were skipped. Values attached with ``record_property`` are echoed.

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed and not rep.skipped):
        return
    n, text = mark.args
    entry = _CRITERIA.setdefault(n, {"text": text, "outcomes": [], "notes": []})
    entry["outcomes"].append(rep.outcome)
    entry["notes"] += [f"{k}={v}" for k, v in item.user_properties]
    if rep.skipped and isinstance(rep.longrepr, tuple):
        entry["notes"].append(rep.longrepr[2])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        outs = e["outcomes"]
        status = "FAIL" if "failed" in outs else "SKIP" if all(o == "skipped" for o in outs) else "PASS"
        notes = "; ".join(dict.fromkeys(e["notes"]))
        terminalreporter.write_line(f"criterion {n:>2} {status}: {e['text']}" + (f" [{notes}]" if notes else ""))
