"""Conventional P-omega / Q-V droop with distributed secondary control.

This is the comparison controller: frequency restoration with active power
sharing through the same pinned-consensus template as the proposed scheme,
and exact voltage restoration where only the pinned CIG sees ``V_s``.
Neighbour values are exchanged continuously.
"""

from dataclasses import dataclass


@dataclass
class PfqvParams:
    m_p: float = 1e-5
    n_q: float = 1e-3
    c_f: float = 10.0
    c_v: float = 5.0
    b_f: float = 0.0
    b_v: float = 0.0

    def __post_init__(self):
        if not (self.m_p > 0 and self.n_q > 0):
            raise ValueError("PFQV droop gains must be positive")


@dataclass
class PfqvSetpoints:
    omega_star: float
    v_star: float
    P_nom: float = 0.0
    Q_nom: float = 0.0


def pfqv_primary(P, Q, setpoints, params):
    """Return ``(omega, |v_o| reference)``; the q-axis voltage reference is zero."""
    omega = setpoints.omega_star - params.m_p * (P - setpoints.P_nom)
    vref = setpoints.v_star - params.n_q * (Q - setpoints.Q_nom)
    return omega, vref


def p_sharing_signal(P, P_nom, m_p):
    return m_p * (P - P_nom)


def pfqv_secondary_rates(omega_i, vmag_i, p_signal_i, neighbors, omega_s, V_s, params):
    """``(d omega*/dt, d V*/dt)`` for one CIG.

    ``neighbors`` holds ``(a_ij, omega_j, p_signal_j, vmag_j)`` with live values.
    """
    acc_f = params.b_f * (omega_i - omega_s)
    acc_v = params.b_v * (vmag_i - V_s)
    for a_ij, omega_j, p_j, v_j in neighbors:
        acc_f += a_ij * (omega_i - omega_j + p_signal_i - p_j)
        acc_v += a_ij * (vmag_i - v_j)
    return -params.c_f * acc_f, -params.c_v * acc_v
