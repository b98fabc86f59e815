import numpy as np
import pytest

from asyspa_lab.errors import InvariantViolation, RoutingError
from asyspa_lab.graph import Digraph, build_topology
from asyspa_lab.objective import AbsDeviation, ZeroObjective
from asyspa_lab.protocol import Message, NodeState, asyspa_activate, deposit, naive_activate, synspa_round
from asyspa_lab.stepsize import StepsizeSchedule

HARMONIC = StepsizeSchedule("power", 1.0, 1.0)


def loaded_state(l=3, count=1):
    s = NodeState(0, [0.0], out_degree=2, l=l, local_update_count=count)
    deposit(s, Message(0, 1, 0, np.array([0.5]), 0.5, 3))
    deposit(s, Message(1, 1, 0, np.array([0.25]), 0.25, 5))
    return s


def test_asyspa_hand_trace():
    s = loaded_state()
    bc = asyspa_activate(s, HARMONIC, AbsDeviation(2.0))
    alpha = 1 / 3 + 1 / 4 + 1 / 5
    assert bc.alpha == pytest.approx(alpha, abs=1e-15)
    assert s.z[0] == 1.0 and s.y == 0.75
    assert s.x[0] == pytest.approx(0.75 + alpha, abs=1e-15)
    assert s.l == 6 and (bc.l_before, bc.l_after) == (3, 6)
    assert s.buffer_sizes == (0, 0, 0)
    assert bc.x_share[0] == pytest.approx(s.x[0] / 2) and bc.y_share == 0.375
    assert bc.consumed == [0, 1]


def test_naive_hand_trace():
    s = loaded_state(count=3)
    bc = naive_activate(s, HARMONIC, AbsDeviation(2.0))
    assert bc.alpha == pytest.approx(1 / 3)
    assert s.local_update_count == 4
    assert s.l == 3


def test_multiple_receptions_from_one_sender_all_kept():
    s = NodeState(0, [0.0], out_degree=1)
    for mid in range(3):
        deposit(s, Message(mid, 1, 0, np.array([1.0]), 0.5, 1))
    assert s.buffer_sizes == (3, 3, 3)
    asyspa_activate(s, HARMONIC, ZeroObjective())
    assert s.y == 1.5 and s.z[0] == 2.0


def test_misrouted_message():
    with pytest.raises(RoutingError):
        deposit(NodeState(0, [0.0], 1), Message(0, 1, 2, np.array([0.0]), 1.0, 1))


def test_empty_buffer_skips_update():
    s = NodeState(0, [4.0], 1)
    assert asyspa_activate(s, HARMONIC, AbsDeviation(0.0)) is None
    assert s.x[0] == 4.0 and s.l == 1


def test_nonpositive_weight_is_fatal():
    s = NodeState(0, [0.0], 1)
    deposit(s, Message(0, 0, 0, np.array([0.0]), 0.0, 1))
    with pytest.raises(InvariantViolation):
        asyspa_activate(s, HARMONIC, ZeroObjective())


def test_single_node_is_centralized_descent():
    s = NodeState(0, [5.0], 1)
    obj = AbsDeviation(0.0)
    x = 5.0
    for k in range(1, 30):
        deposit(s, Message(k, 0, 0, s.x.copy(), s.y, s.l))
        asyspa_activate(s, HARMONIC, obj)
        x = x - HARMONIC.rho(k) * np.sign(x)
        assert s.x[0] == pytest.approx(x, abs=1e-14)


def test_synspa_consensus_fixed_point():
    g = build_topology("complete", 2)
    states = [NodeState(0, [1.0], 2), NodeState(1, [3.0], 2)]
    synspa_round(states, g, 1, HARMONIC, [ZeroObjective()] * 2)
    assert [s.x[0] for s in states] == [2.0, 2.0]
    assert [s.y for s in states] == [1.0, 1.0]


def test_synspa_abs_hand_trace():
    g = build_topology("complete", 2)
    states = [NodeState(0, [1.0], 2), NodeState(1, [3.0], 2)]
    objs = [AbsDeviation(0.0), AbsDeviation(5.0)]
    synspa_round(states, g, 1, HARMONIC, objs)
    assert [s.x[0] for s in states] == [2.0 - 1.0, 2.0 + 1.0]


def test_synspa_single_node():
    g = Digraph.single_node()
    s = [NodeState(0, [3.0], 1)]
    for k in range(1, 5):
        synspa_round(s, g, k, HARMONIC, [AbsDeviation(0.0)])
    assert s[0].x[0] == pytest.approx(3.0 - 1 - 1 / 2 - 1 / 3 - 1 / 4)
