import sys
from pathlib import Path

import numpy as np
import pytest

from mvtwosample import _backend
from mvtwosample.core import PooledSample

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run the test once per available kernel backend."""
    previous = _backend.name()
    _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(previous)


def random_pooled(rng, N, d, n=None, ties=False):
    n = int(rng.integers(1, N)) if n is None else n
    pts = rng.normal(size=(N, d))
    if ties:
        pts = np.round(pts, 0)
    labels = np.zeros(N, dtype=bool)
    labels[rng.choice(N, n, replace=False)] = True
    return PooledSample(pts, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
