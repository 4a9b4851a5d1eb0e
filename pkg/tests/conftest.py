import numpy as np
import pytest

from gazescape import _kernels
from gazescape.gaze import GazeSample


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # pay the JIT cost once, before anything is timed
    _kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20240831)


def make_gaze(t_ms, x, y, valid=True, source_id=0):
    return GazeSample(t_ms=t_ms, x=x, y=y, valid=valid, source_id=source_id)


def steady_gaze(x, y, start_ms, end_ms, hz=30, source_id=0):
    """Valid samples parked at one point."""
    step = max(1, round(1000 / hz))
    return [GazeSample(t_ms=t, x=x, y=y, valid=True, source_id=source_id)
            for t in range(start_ms, end_ms, step)]


def random_walk_gaze(rng, n, start_ms=0, step_ms=20, step_sd=0.01):
    xs = np.clip(np.cumsum(rng.normal(0, step_sd, n)) + 0.5, 0.0, 1.0)
    ys = np.clip(np.cumsum(rng.normal(0, step_sd, n)) + 0.5, 0.0, 1.0)
    return [GazeSample(t_ms=start_ms + i * step_ms, x=float(xs[i]),
                       y=float(ys[i]), valid=True) for i in range(n)]
