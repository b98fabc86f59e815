import math

import pytest
from hypothesis import given, strategies as st

from asyspa_lab.errors import ParameterError
from asyspa_lab.stepsize import StepsizeSchedule, rate_normalizer_s, window_sum


def test_rho_values():
    assert StepsizeSchedule("power", 1.0, 0.5).rho(4) == 0.5
    assert StepsizeSchedule("power", 1.0, 1.0).rho(10) == pytest.approx(0.1)
    c = StepsizeSchedule("constant", 0.1 / 2000)
    assert c.rho(1) == c.rho(10**6) == 0.1 / 2000


def test_rho_index_checked():
    with pytest.raises(ParameterError):
        StepsizeSchedule().rho(0)


def test_window_sum_examples():
    s = StepsizeSchedule("power", 1.0, 1.0)
    assert window_sum(s, 3, 5) == pytest.approx(1 / 3 + 1 / 4 + 1 / 5, abs=1e-15)
    assert window_sum(s, 2, 1) == 0.0
    assert window_sum(StepsizeSchedule("constant", 0.1), 1, 10) == pytest.approx(1.0)


def test_long_prefix_accuracy():
    # harmonic number H_n = ln n + gamma + 1/(2n) - 1/(12 n^2) + 1/(120 n^4)
    n = 10**7
    s = StepsizeSchedule("power", 1.0, 1.0)
    h = math.log(n) + 0.5772156649015329 + 1 / (2 * n) - 1 / (12 * n**2)
    assert abs(s.prefix(n) - h) / h < 1e-12


def test_rate_normalizer():
    assert rate_normalizer_s(1.0, math.e**2) == pytest.approx(2.0)
    assert rate_normalizer_s(0.75, 16) == pytest.approx(4.0)
    assert rate_normalizer_s(1.0, 1) == 0.0
    with pytest.raises(ParameterError):
        rate_normalizer_s(0.5, 10)


def test_square_summable_by_kind():
    assert StepsizeSchedule("power", 1.0, 0.6).square_summable
    assert not StepsizeSchedule("power", 1.0, 0.5).square_summable
    assert not StepsizeSchedule("constant", 1.0).square_summable


alphas = st.floats(0.05, 1.0)


@given(alphas, st.integers(1, 5000), st.integers(0, 300), st.integers(0, 300))
def test_window_additivity(alpha, a, w1, w2):
    s = StepsizeSchedule("power", 1.0, alpha)
    b, c = a + w1, a + w1 + w2
    assert window_sum(s, a, b) + window_sum(s, b + 1, c) == pytest.approx(window_sum(s, a, c), rel=1e-12, abs=1e-12)


@given(alphas, st.integers(1, 20000))
def test_full_window_is_prefix(alpha, k):
    s = StepsizeSchedule("power", 1.0, alpha)
    assert window_sum(s, 1, k) == pytest.approx(s.prefix(k), rel=1e-12)


@given(alphas, st.integers(1, 10**5), st.integers(0, 200))
def test_window_monotonicity_bound(alpha, l, w):
    s = StepsizeSchedule("power", 1.0, alpha)
    assert window_sum(s, l, l + w) <= (w + 1) * s.rho(l) * (1 + 1e-12)


@given(alphas, st.integers(1, 10**6))
def test_power_nonincreasing(alpha, k):
    s = StepsizeSchedule("power", 2.0, alpha)
    assert 0 < s.rho(k + 1) <= s.rho(k)
