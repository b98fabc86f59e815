import numpy as np
import pytest

from asyspa_lab.graph import build_topology
from asyspa_lab.objective import AbsDeviation, Quadratic, ZeroObjective
from asyspa_lab.simulator import SimConfig, Timing
from asyspa_lab.stepsize import StepsizeSchedule


def ring_config(n=3, objectives=None, timing=None, algorithm="asyspa", max_events=500, seed=0, **kw):
    g = build_topology("ring", n)
    objs = objectives if objectives is not None else [AbsDeviation(float(c)) for c in range(n)]
    timing = timing or Timing(mode="uniform", gap_min=1.0, gap_max=2.0, tau_delay=2.0)
    return SimConfig(g, objs, StepsizeSchedule("power", 1.0, 0.6), timing, algorithm=algorithm,
                     max_events=max_events, seed=seed, **kw)


@pytest.fixture
def small_ring():
    return ring_config()


@pytest.fixture
def zero_ring():
    return ring_config(objectives=[ZeroObjective()] * 3, x0=[1.0, 2.0, 6.0],
                       timing=Timing(mode="periodic", periods=(1.0, 1.0, 1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


