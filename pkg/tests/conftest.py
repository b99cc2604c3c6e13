import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ballinterp", max_examples=40, deadline=None)
settings.load_profile("ballinterp")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_points(rng, size, n, radius=0.95):
    from ballinterp.geometry import uniform_ball

    return uniform_ball(rng, size, n, radius=radius)


# acceptance criteria: one line each in the terminal summary
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(k, ok, detail=""):
        ACCEPTANCE[k] = (bool(ok), detail)
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    outcome = {}
    for key in ("passed", "failed", "error"):
        for r in terminalreporter.stats.get(key, []):
            name = getattr(r, "nodeid", "").rpartition("::")[2]
            if name.startswith("test_criterion_") and r.when in ("call", "setup"):
                k = int(name.split("_")[2])
                outcome[k] = outcome.get(k, True) and key == "passed"
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(outcome):
        ok, detail = ACCEPTANCE.get(k, (False, "no result recorded"))
        ok = ok and outcome[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
