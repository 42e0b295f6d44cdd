"""Average-voltage regulation (dynamic consensus + shared discrete PI) and the
triggered decentralized individual-voltage controller."""

import dataclasses
from dataclasses import dataclass

import numpy as np


def average_voltage(vmags):
    """Centralized mean of the output voltage magnitudes (test reference only)."""
    if len(vmags) == 0:
        raise ValueError("average of an empty voltage list")
    return float(sum(vmags)) / len(vmags)


@dataclass(frozen=True)
class ConsensusState:
    rho: float
    k_I: float
    r_curr: float = 0.0
    r_prev: float = 0.0
    u_held: float = 0.0
    x: float = 0.0


def consensus_step(state, neighbor_x):
    """One synchronous round of the second-order dynamic average consensus.

    ``neighbor_x`` lists ``(a_ij, x_j)`` from the same round.
    """
    rho2 = state.rho ** 2
    disagreement = sum(a * (state.x - xj) for a, xj in neighbor_x)
    r_next = (1.0 + rho2) * state.r_curr - rho2 * state.r_prev + state.k_I * disagreement
    return dataclasses.replace(state, r_prev=state.r_curr, r_curr=r_next, x=state.u_held - r_next)


def sample_input(state, vmag):
    """t2 boundary: read the agreement state as the estimate, then refresh the input.

    Returns ``(vbar_estimate, new_state)``.
    """
    estimate = state.x
    return estimate, dataclasses.replace(state, u_held=vmag, x=vmag - state.r_curr)


def default_consensus_gain(adjacency):
    """``k_I = 1 / (1 + max degree)``, inside the stable region for any ``rho < 1``."""
    deg = np.asarray(adjacency).sum(axis=1)
    return 1.0 / (1.0 + deg.max())


def consensus_spectral_radius(adjacency, rho, k_I):
    """Largest root modulus of the error recursion over the non-consensus modes.

    The recursion ``e+ = ((1 + rho^2) I - k_I L) e - rho^2 e-`` is stable iff this
    is below one.
    """
    A = np.asarray(adjacency, dtype=float)
    lap = np.diag(A.sum(axis=1)) - A
    lam = np.sort(np.linalg.eigvalsh(lap))[1:]
    worst = 0.0
    for lv in lam:
        roots = np.roots([1.0, -(1.0 + rho ** 2 - k_I * lv), rho ** 2])
        worst = max(worst, float(np.max(np.abs(roots))))
    return worst


@dataclass
class AvgVoltPI:
    Kp: float
    Ki: float
    n: float
    t2: float
    d: float = 0.0
    e_prev: float = 0.0

    @property
    def output(self):
        return self.n * self.d


def avg_volt_pi_step(pi, vbar_estimate, V_s):
    """Advance the discrete PI ``Kp + Ki t2 / (z - 1)`` by one t2 sample.

    Mutates ``pi`` and returns the new ``P_Vav = n * d``.
    """
    e = V_s - vbar_estimate
    pi.d += pi.Kp * (e - pi.e_prev) + pi.Ki * pi.t2 * pi.e_prev
    pi.e_prev = e
    return pi.n * pi.d


@dataclass(frozen=True)
class IndModeGains:
    Kp_P: float = 0.0
    Ki_P: float = 0.0
    Kp_Q: float = 0.0
    Ki_Q: float = 0.0

    def __post_init__(self):
        if min(self.Kp_P, self.Ki_P, self.Kp_Q, self.Ki_Q) < 0:
            raise ValueError("individual voltage gains must be non-negative")

    @property
    def mode(self):
        if self.Ki_P > 0 or self.Ki_Q > 0:
            return 2
        if self.Kp_P > 0 or self.Kp_Q > 0:
            return 1
        return 0


@dataclass
class IndVoltCtl:
    V_s: float
    gains: IndModeGains = IndModeGains()
    int_P: float = 0.0
    int_Q: float = 0.0
    triggered: bool = False

    def trigger(self, gains):
        self.gains = gains
        self.int_P = self.int_Q = 0.0
        self.triggered = True


def ind_volt_step(ctl, vmag, dt):
    """Advance the individual-voltage PIs by ``dt`` and return ``(P_Vind, Q_Vind)``."""
    if not ctl.triggered:
        return 0.0, 0.0
    e = ctl.V_s - vmag
    ctl.int_P += e * dt
    ctl.int_Q += e * dt
    g = ctl.gains
    return g.Kp_P * e + g.Ki_P * ctl.int_P, g.Kp_Q * e + g.Ki_Q * ctl.int_Q


@dataclass
class BandTrigger:
    """Fires once ``| |v_o| - V_s |`` has exceeded ``threshold`` for ``dwell`` seconds."""

    threshold: float
    dwell: float
    mode: int
    _since: float = None

    def update(self, t, vmag, V_s):
        if abs(vmag - V_s) > self.threshold:
            if self._since is None:
                self._since = t
            return t - self._since >= self.dwell
        self._since = None
        return False
