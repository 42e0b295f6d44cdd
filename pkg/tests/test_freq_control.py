import numpy as np
import pytest
from scipy.linalg import expm

from mgsim.comm import Message
from mgsim.freq_control import (DroopParams, SecondaryFreqState, droop_frequency, q_base, secondary_freq_rate,
                                sharing_signal)

WS = 2 * np.pi * 50


def test_droop_examples():
    assert droop_frequency(WS, 1000.0, 1000.0, 2e-5) == WS
    assert droop_frequency(WS, 1500.0, 1000.0, 2e-5) == pytest.approx(WS + 0.01)
    assert q_base(100.0, -20.0) == 80.0
    assert sharing_signal(1500.0, 1000.0, 2e-5) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        DroopParams(m=0.0)


def test_pinning_term_only():
    assert secondary_freq_rate(WS + 0.5, WS, 0.0, [], c_f=2.0, b=1.0) == pytest.approx(-1.0)


def test_fixed_point_is_zero_rate():
    nbrs = [(1.0, WS, 0.003), (1.0, WS, 0.003)]
    assert secondary_freq_rate(WS, WS, 0.003, nbrs, 10.0, 1.0) == 0.0


def test_receive_holds_latest_values():
    st = SecondaryFreqState(WS, 10.0)
    st.receive([Message(1, 314.0, 0.1, 0.0, 0), Message(2, 315.0, 0.2, 0.0, 0)])
    st.receive([Message(1, 313.0, 0.3, 0.0, 1)])
    assert st.last_rx == {1: (313.0, 0.3), 2: (315.0, 0.2)}


def test_two_cig_matches_matrix_exponential():
    """Static droop signals s_i: omega_i = omega*_i + s_i, continuous exchange."""
    c_f, b = 10.0, np.array([1.0, 0.0])
    s = np.array([0.004, -0.011])
    x0 = np.array([WS + 0.3, WS - 0.2])

    def rates(x):
        om = x + s
        return np.array([
            secondary_freq_rate(om[i], WS, s[i], [(1.0, om[1 - i], s[1 - i])], c_f, b[i]) for i in range(2)])

    # e = x - omega_s obeys e' = A e + g; solved with an augmented exponential
    Lap = np.array([[1.0, -1.0], [-1.0, 1.0]])
    A = -c_f * (np.diag(b) + Lap)
    g = -c_f * b * s
    M = np.zeros((3, 3))
    M[:2, :2] = A
    M[:2, 2] = g
    dt = 1e-4
    x = x0.copy()
    worst = 0.0
    for k in range(1, 10001):
        k1 = rates(x)
        k2 = rates(x + 0.5 * dt * k1)
        k3 = rates(x + 0.5 * dt * k2)
        k4 = rates(x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % 100 == 0:
            exact = (expm(M * k * dt) @ np.append(x0 - WS, 1.0))[:2] + WS
            worst = max(worst, np.max(np.abs(x - exact)))
    assert worst < 1e-8
