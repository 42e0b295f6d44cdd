"""Q-omega primary droop and pinned distributed secondary frequency control."""

from dataclasses import dataclass, field


@dataclass
class DroopParams:
    m: float
    Q_nom: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("droop coefficient m must be positive")


@dataclass
class SecondaryFreqState:
    omega_star: float
    c_f: float
    b: float = 0.0
    # sender id -> (omega_hat, q_hat), zero-order held between rounds
    last_rx: dict = field(default_factory=dict)

    def receive(self, messages):
        for msg in messages:
            self.last_rx[msg.sender] = (msg.omega_hat, msg.q_hat)


def q_base(Q_nom, Q_Vind):
    return Q_nom + Q_Vind


def droop_frequency(omega_star, Q, Q_base, m):
    return omega_star + m * (Q - Q_base)


def sharing_signal(Q, Q_base, m):
    """Droop-scaled reactive sharing signal sent to neighbours (rad/s)."""
    return m * (Q - Q_base)


def secondary_freq_rate(omega_i, omega_s, own_signal, neighbors, c_f, b):
    """d(omega*)/dt for one CIG.

    ``neighbors`` holds ``(a_ij, omega_hat_j, q_hat_j)`` triples with the
    latest received values. ``own_signal`` is this CIG's
    ``m_i (Q_i - Q_base_i)``, evaluated continuously.
    """
    acc = b * (omega_i - omega_s)
    for a_ij, omega_j, q_j in neighbors:
        acc += a_ij * (omega_i - omega_j - own_signal + q_j)
    return -c_f * acc
