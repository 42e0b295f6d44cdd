"""Electrical plant: CIG LC filters, RL lines and loads, network closure.

Every branch (CIG connector, line, load) is a series RL element whose current
is a state in the common D-Q frame. Network bus voltages are algebraic. Two
closures are provided:

* ``"shunt"``: every network bus carries a large resistance ``r_shunt`` to
  ground, so ``V_h = r_shunt * (net current injected into h)``.
* ``"kcl"``: bus voltages are chosen so that the net branch-current
  derivative into every bus is zero, which keeps KCL an exact linear
  invariant of the ODE. This is the engine default because the shunt
  closure has eigenvalues near ``-r_shunt / L`` and forces microsecond steps.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from mgsim.frames import rotate_k, to_global, to_local

GROUND = -1


@dataclass
class CigParams:
    R_f: float
    L_f: float
    C_f: float
    R_c: float
    L_c: float
    bus: int

    def __post_init__(self):
        for name in ("R_f", "L_f", "C_f", "R_c", "L_c"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"CIG parameter {name} must be positive, got {v!r}")


@dataclass
class LineParams:
    R: float
    L: float
    from_bus: int
    to_bus: int

    def __post_init__(self):
        if not (self.R > 0 and self.L > 0):
            raise ValueError(f"line {self.from_bus}-{self.to_bus}: R and L must be positive")
        if self.from_bus == self.to_bus:
            raise ValueError(f"line connects bus {self.from_bus} to itself")


@dataclass
class LoadParams:
    R: float
    L: float
    bus: int

    def __post_init__(self):
        if not (self.R > 0 and self.L > 0):
            raise ValueError(f"load at bus {self.bus}: R and L must be positive")


@dataclass
class CigState:
    """Filter states (local frame), connector current (common frame), angle."""

    i_s: tuple = (0.0, 0.0)
    v_o: tuple = (0.0, 0.0)
    i_conn: tuple = (0.0, 0.0)
    delta: float = 0.0

    @property
    def i_o(self):
        return to_local(self.i_conn, self.delta)


@dataclass
class PlantState:
    cigs: list
    line_currents: list = field(default_factory=list)
    load_currents: list = field(default_factory=list)


def cig_derivatives(state, v_s, omega, params, i_o=None):
    """Time derivatives ``(di_s/dt, dv_o/dt)`` of one CIG's LC filter.

    ``i_o`` defaults to the connector current rotated into the local frame.
    """
    if i_o is None:
        i_o = state.i_o
    i_s, v_o = state.i_s, state.v_o
    ki = rotate_k(i_s)
    kv = rotate_k(v_o)
    di = tuple((-params.R_f * i_s[k] + v_s[k] - v_o[k]) / params.L_f + omega * ki[k] for k in range(2))
    dv = tuple((i_s[k] - i_o[k]) / params.C_f + omega * kv[k] for k in range(2))
    return di, dv


def _rl_derivative(I, dV, R, L, omega_s):
    kI = rotate_k(I)
    return ((-R * I[0] + dV[0]) / L + omega_s * kI[0],
            (-R * I[1] + dV[1]) / L + omega_s * kI[1])


def line_derivative(I, V_a, V_b, params, omega_s):
    return _rl_derivative(I, (V_a[0] - V_b[0], V_a[1] - V_b[1]), params.R, params.L, omega_s)


def load_derivative(I, V, params, omega_s):
    return _rl_derivative(I, V, params.R, params.L, omega_s)


def measure(v_o, i_o):
    """Instantaneous ``(P, Q, |v_o|)`` from local-frame voltage and current."""
    P = v_o[0] * i_o[0] + v_o[1] * i_o[1]
    Q = v_o[1] * i_o[0] - v_o[0] * i_o[1]
    return P, Q, math.hypot(v_o[0], v_o[1])


def pf_sensitivity_p(P, G, vmag):
    """dP/d|V| of the connector power-flow equation at an operating point."""
    if vmag == 0:
        raise ValueError("voltage magnitude must be non-zero")
    return (P + G * vmag * vmag) / vmag


def pf_sensitivity_q(Q, B, vmag):
    """dQ/d|V| of the connector power-flow equation at an operating point."""
    if vmag == 0:
        raise ValueError("voltage magnitude must be non-zero")
    return (Q - B * vmag * vmag) / vmag


class Network:
    """Node/branch incidence of a microgrid.

    Nodes ``0 .. c-1`` are the CIG capacitor nodes (voltages known from the
    CIG states); nodes ``c ..`` are the network buses in ascending id order.
    Branches are the connectors, then ``lines``, then ``loads``.
    """

    def __init__(self, cigs, lines, loads, buses=None):
        self.cigs = list(cigs)
        self.lines = list(lines)
        self.loads = list(loads)
        ids = set(buses or ())
        ids.update(p.bus for p in self.cigs)
        ids.update(p.from_bus for p in self.lines)
        ids.update(p.to_bus for p in self.lines)
        ids.update(p.bus for p in self.loads)
        self.bus_ids = sorted(ids)
        self.c = len(self.cigs)
        self.node_of_bus = {b: self.c + k for k, b in enumerate(self.bus_ids)}

        a, b, R, L = [], [], [], []
        for i, p in enumerate(self.cigs):
            a.append(i); b.append(self.node_of_bus[p.bus]); R.append(p.R_c); L.append(p.L_c)
        for p in self.lines:
            a.append(self.node_of_bus[p.from_bus]); b.append(self.node_of_bus[p.to_bus])
            R.append(p.R); L.append(p.L)
        for p in self.loads:
            a.append(self.node_of_bus[p.bus]); b.append(GROUND); R.append(p.R); L.append(p.L)
        self.br_a = np.array(a, dtype=np.int32)
        self.br_b = np.array(b, dtype=np.int32)
        self.br_R = np.array(R, dtype=float)
        self.br_L = np.array(L, dtype=float)
        self._check_isolated()

    @property
    def n_branches(self):
        return len(self.br_R)

    @property
    def n_buses(self):
        return len(self.bus_ids)

    def line_branch(self, k):
        return self.c + k

    def load_branch(self, k):
        return self.c + len(self.lines) + k

    def incidence(self):
        """``(n_nodes, n_branches)`` matrix with +1 at the from node, -1 at the to node."""
        A = np.zeros((self.c + self.n_buses, self.n_branches))
        for k in range(self.n_branches):
            A[self.br_a[k], k] = 1.0
            if self.br_b[k] != GROUND:
                A[self.br_b[k], k] = -1.0
        return A

    def _check_isolated(self):
        deg = np.zeros(self.n_buses, dtype=int)
        for k in range(self.n_branches):
            for node in (self.br_a[k], self.br_b[k]):
                if node >= self.c:
                    deg[node - self.c] += 1
        lonely = [self.bus_ids[h] for h in range(self.n_buses) if deg[h] == 0]
        if lonely:
            raise ValueError(f"isolated bus(es) with no branches: {lonely}")

    def kcl_matrix(self):
        """Inverse of the inductance-weighted bus Laplacian used by the KCL closure."""
        A = self.incidence()[self.c:]
        M = A @ np.diag(1.0 / self.br_L) @ A.T
        return np.linalg.inv(M)

    def set_load(self, k, R, L):
        self.loads[k] = LoadParams(R, L, self.loads[k].bus)
        self.br_R[self.load_branch(k)] = R
        self.br_L[self.load_branch(k)] = L

    def branch_currents(self, state):
        cur = [tuple(s.i_conn) for s in state.cigs]
        cur += [tuple(I) for I in state.line_currents]
        cur += [tuple(I) for I in state.load_currents]
        return np.array(cur, dtype=float).reshape(-1, 2)

    def injections(self, state):
        """Net DQ current injected into each network bus by its branches."""
        I = self.branch_currents(state)
        return -self.incidence()[self.c:] @ I


def solve_bus_voltages(network, state, r_shunt=1000.0):
    """Node voltages under the virtual-shunt closure.

    Returns ``{bus_id: (V_D, V_Q)}``; CIG capacitor nodes are keyed
    ``("cig", i)``.
    """
    V = {("cig", i): to_global(s.v_o, s.delta) for i, s in enumerate(state.cigs)}
    inj = network.injections(state)
    for h, bus in enumerate(network.bus_ids):
        V[bus] = (r_shunt * inj[h, 0], r_shunt * inj[h, 1])
    return V


def solve_bus_voltages_kcl(network, state, omega_s):
    """Node voltages under the inductive KCL closure (same keys as above)."""
    c = network.c
    V = {("cig", i): to_global(s.v_o, s.delta) for i, s in enumerate(state.cigs)}
    I = network.branch_currents(state)
    A = network.incidence()
    Au, Ac = A[c:], A[:c]
    invL = 1.0 / network.br_L
    Vc = np.array([V[("cig", i)] for i in range(c)]).reshape(-1, 2)
    KI = np.column_stack([I[:, 1], -I[:, 0]])
    rhs = Au @ ((network.br_R * invL)[:, None] * I) - omega_s * (Au @ KI)
    rhs -= Au @ (invL[:, None] * (Ac.T @ Vc))
    Vu = network.kcl_matrix() @ rhs
    for h, bus in enumerate(network.bus_ids):
        V[bus] = (float(Vu[h, 0]), float(Vu[h, 1]))
    return V
