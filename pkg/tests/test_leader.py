import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscsync.leader import LeaderState, leader_acceleration, leader_closed_form, leader_derivative
from oscsync.simulator import rk4_step

from .strategies import finite

Q0, QD0 = np.array([2.0, 0.0]), np.array([0.0, 1.0])


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5, 7.0, 33.3])
def test_elliptic_orbit(t):
    st_ = leader_closed_form(t, Q0, QD0, 1.0)
    np.testing.assert_allclose(st_.q0, [2 * math.cos(t), math.sin(t)], atol=1e-15)
    np.testing.assert_allclose(st_.q0_dot, [-2 * math.sin(t), math.cos(t)], atol=1e-15)


def test_initial_condition():
    st_ = leader_closed_form(0.0, Q0, QD0, 2.0)
    np.testing.assert_array_equal(st_.q0_int, [0.0, 0.0])
    np.testing.assert_array_equal(st_.q0, Q0)
    np.testing.assert_array_equal(st_.q0_dot, QD0)


def test_periodic():
    a = leader_closed_form(2 * math.pi, Q0, QD0, 1.0)
    assert np.abs(a.q0 - Q0).max() < 1e-12
    assert np.abs(a.q0_dot - QD0).max() < 1e-12
    assert np.abs(a.q0_int).max() < 1e-12


def test_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        leader_closed_form(1.0, Q0, QD0, 0.0)
    with pytest.raises(ValueError):
        leader_closed_form(1.0, Q0, QD0, -1.0)


@pytest.mark.parametrize(
    "alpha,q0,expected", [(1.0, [2, 0], [-2, 0]), (1.0, [0, 0], [0, 0]), (4.0, [1, -1], [-4, 4])]
)
def test_acceleration(alpha, q0, expected):
    state = LeaderState(np.array(q0, float), np.zeros(2), np.zeros(2), alpha)
    np.testing.assert_array_equal(leader_acceleration(state), expected)


@given(t=st.floats(0, 100), alpha=st.floats(0.05, 10), q0=finite, qd0=finite)
def test_energy_conserved(t, alpha, q0, qd0):
    e0 = alpha * q0**2 + qd0**2
    st_ = leader_closed_form(t, [q0], [qd0], alpha)
    assert abs(st_.energy()[0] - e0) < 1e-9 * max(1.0, e0)


@given(t=st.floats(0.01, 50), alpha=st.floats(0.1, 10), q0=finite, qd0=finite)
def test_derivatives_consistent(t, alpha, q0, qd0):
    # central differences of the closed form recover (q0, q0', -alpha q0)
    h = 1e-5
    a, b = leader_closed_form(t - h, [q0], [qd0], alpha), leader_closed_form(t + h, [q0], [qd0], alpha)
    mid = leader_closed_form(t, [q0], [qd0], alpha)
    scale = 1 + abs(q0) + abs(qd0)
    assert abs((b.q0_int - a.q0_int)[0] / (2 * h) - mid.q0[0]) < 1e-6 * scale * max(1, alpha)
    assert abs((b.q0 - a.q0)[0] / (2 * h) - mid.q0_dot[0]) < 1e-6 * scale * max(1, alpha)
    assert abs((b.q0_dot - a.q0_dot)[0] / (2 * h) + alpha * mid.q0[0]) < 1e-6 * scale * max(1, alpha) ** 1.5


def test_rk4_matches_closed_form():
    dt, alpha = 1e-3, 1.0
    y = np.stack((np.zeros(2), Q0, QD0))
    worst = 0.0
    for k in range(20000):
        y = rk4_step(lambda t, v: leader_derivative(v, alpha), k * dt, y, dt)
        ref = leader_closed_form((k + 1) * dt, Q0, QD0, alpha)
        worst = max(worst, np.abs(y - np.stack((ref.q0_int, ref.q0, ref.q0_dot))).max())
    assert worst < 1e-6
