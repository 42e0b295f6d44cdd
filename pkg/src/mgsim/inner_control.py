"""Active-power setpoint and cascaded voltage/current PI loops of one CIG."""

import math
from dataclasses import dataclass, field

from mgsim.frames import rotate_k


@dataclass
class InnerGains:
    Kp_vd: float = 0.0
    Ki_vd: float = 5.0
    Kp_v: float = 0.05
    Ki_v: float = 390.0
    Kp_i: float = 10.5
    Ki_i: float = 16000.0
    F: float = 0.75
    eps: float = 0.01
    vs_max: float = math.inf

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        for name in ("Kp_vd", "Ki_vd", "Kp_v", "Ki_v", "Kp_i", "Ki_i", "F"):
            if getattr(self, name) < 0:
                raise ValueError(f"gain {name} must be non-negative")
        if not self.vs_max > 0:
            raise ValueError("vs_max must be positive (use inf for no limit)")


@dataclass
class InnerIntegrators:
    int_vd: float = 0.0
    int_v: tuple = field(default=(0.0, 0.0))
    int_i: tuple = field(default=(0.0, 0.0))


def power_setpoint(P_nom, P_Vav, P_Vind):
    return P_nom + P_Vav + P_Vind


def vd_setpoint(P_star, i_od, eps):
    """d-axis voltage that would deliver ``P_star`` at the present d current.

    ``eps`` keeps the quotient bounded near zero current; ``sgn(0) = +1``.
    """
    sgn = 1.0 if i_od >= 0 else -1.0
    return sgn * P_star / (abs(i_od) + eps)


def outer_voltage_pi(v_od_set, v_od, gains, integrators):
    """d-axis voltage reference; the q-axis reference is always zero."""
    return gains.Kp_vd * (v_od_set - v_od) + gains.Ki_vd * integrators.int_vd


def voltage_loop(v_o_star, v_o, i_o, omega, gains, params, integrators):
    kv = rotate_k(v_o)
    return tuple(
        gains.F * i_o[k] - params.C_f * omega * kv[k]
        + gains.Kp_v * (v_o_star[k] - v_o[k]) + gains.Ki_v * integrators.int_v[k]
        for k in range(2)
    )


def current_loop(i_s_star, i_s, omega, gains, params, integrators):
    ki = rotate_k(i_s)
    return tuple(
        -params.L_f * omega * ki[k]
        + gains.Kp_i * (i_s_star[k] - i_s[k]) + gains.Ki_i * integrators.int_i[k]
        for k in range(2)
    )


def limit_switching_voltage(v_s, vs_max):
    """Scale ``v_s`` onto the disc of radius ``vs_max``.

    Returns ``(v_s, saturated)``; callers stop the loop integrators while
    saturated.
    """
    mag = math.hypot(v_s[0], v_s[1])
    if mag > vs_max:
        s = vs_max / mag
        return (v_s[0] * s, v_s[1] * s), True
    return tuple(v_s), False
