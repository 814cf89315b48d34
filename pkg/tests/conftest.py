import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from potlab.green import ModelDomain, disk_green  # noqa: E402
from potlab.grid import ScalarField  # noqa: E402

H = 1.0 / 256
S_HALF = [(0j, 0.5)]


@pytest.fixture(scope="session")
def disk():
    return ModelDomain.disk(0, 1.0)


@pytest.fixture(scope="session")
def grid(disk):
    return disk.grid(H)


@pytest.fixture(scope="session")
def coarse(disk):
    return disk.grid(1.0 / 64)


@pytest.fixture(scope="session")
def punctured(disk):
    """Unit disk minus the closed ball of radius 1/2, at h = 1/256."""
    return disk.grid(H, exclusion=S_HALF)


@pytest.fixture(scope="session")
def green0(punctured):
    return ScalarField.from_function(punctured, disk_green(0, 1, 0))


ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """record(n, ok, detail): one acceptance line per criterion."""

    def _record(n, ok, detail):
        ACCEPTANCE[n] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


from hypothesis import settings  # noqa: E402

settings.register_profile("stress", max_examples=300, deadline=None)
settings.register_profile("default", deadline=None, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))
