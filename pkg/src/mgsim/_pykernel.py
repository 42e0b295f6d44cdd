"""Pure-Python fallback kernel built from the per-module operations.

Same interface as the compiled ``mgsim._ckernel.Kernel``. It is roughly two
orders of magnitude slower and is meant for short runs, platforms without a
compiler, and cross-checking the compiled kernel.
"""

import math
from types import SimpleNamespace

import numpy as np

from mgsim import layout as L
from mgsim.baseline_pfqv import PfqvParams, PfqvSetpoints, p_sharing_signal, pfqv_primary, pfqv_secondary_rates
from mgsim.frames import to_global
from mgsim.freq_control import droop_frequency, q_base, secondary_freq_rate, sharing_signal
from mgsim.inner_control import (current_loop, limit_switching_voltage, outer_voltage_pi, power_setpoint,
                                 vd_setpoint, voltage_loop)
from mgsim.plant import CigState, GROUND, cig_derivatives, measure


def ramp(t, v0, v1, t0, t1):
    if t <= t0:
        return v0
    if t >= t1:
        return v1
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def layout_signature():
    return L.layout_signature()


class Kernel:
    def __init__(self, cigp, gp, br_a, br_b, br_R, br_L, minv, adj):
        self.cigp = cigp
        self.gp = gp
        self.br_a = br_a
        self.br_b = br_b
        self.br_R = br_R
        self.br_L = br_L
        self.minv = minv
        self.adj = adj
        self.c = cigp.shape[0]
        self.nb = br_R.shape[0]
        self.nu = minv.shape[0]
        self.n = self.c * L.NX_CIG + 2 * self.nb
        self._vnode = np.zeros((self.c + self.nu, 2))

    # -- helpers -----------------------------------------------------------
    def _cig(self, y, i):
        o = i * L.NX_CIG
        ib = self.c * L.NX_CIG + 2 * i
        return CigState(i_s=(y[o + L.IS_D], y[o + L.IS_Q]), v_o=(y[o + L.VO_D], y[o + L.VO_Q]),
                        i_conn=(y[ib], y[ib + 1]), delta=y[o + L.DELTA])

    def _p_nom(self, t, p):
        return ramp(t, p[L.P_NOM0], p[L.P_NOM1], p[L.P_T0], p[L.P_T1])

    def _q_nom(self, t, p):
        return ramp(t, p[L.Q_NOM0], p[L.Q_NOM1], p[L.Q_T0], p[L.Q_T1])

    def _measure_all(self, t, y):
        V_s = self.gp[L.G_V_S]
        kind = int(self.gp[L.G_KIND])
        rows = []
        for i in range(self.c):
            p = self.cigp[i]
            o = i * L.NX_CIG
            st = self._cig(y, i)
            P, Q, vmag = measure(st.v_o, st.i_o)
            if p[L.IND_ON] != 0.0:
                # shared integral state for both the P and Q paths
                e = V_s - vmag
                pvind = p[L.KP_P] * e + p[L.KI_P] * y[o + L.INT_IND]
                qvind = p[L.KP_Q] * e + p[L.KI_Q] * y[o + L.INT_IND]
            else:
                pvind = qvind = 0.0
            qb = q_base(self._q_nom(t, p), qvind)
            if kind == L.KIND_PROPOSED:
                omega = droop_frequency(y[o + L.WSTAR], Q, qb, p[L.M_Q])
            else:
                sp = PfqvSetpoints(y[o + L.WSTAR], y[o + L.VSTAR], self._p_nom(t, p), self._q_nom(t, p))
                omega, _ = pfqv_primary(P, Q, sp, PfqvParams(m_p=p[L.M_P], n_q=p[L.N_Q]))
            row = [0.0] * L.N_OUT
            row[L.OUT_OMEGA] = omega
            row[L.OUT_VMAG] = vmag
            row[L.OUT_P] = P
            row[L.OUT_Q] = Q
            row[L.OUT_P_VIND] = pvind
            row[L.OUT_Q_VIND] = qvind
            row[L.OUT_Q_BASE] = qb
            rows.append(row)
        return rows

    def _deriv(self, t, y):
        c = self.c
        w_s = self.gp[L.G_OMEGA_S]
        V_s = self.gp[L.G_V_S]
        kind = int(self.gp[L.G_KIND])
        out = self._measure_all(t, y)
        dy = np.zeros(self.n)
        vnode = self._vnode

        for i in range(c):
            p = self.cigp[i]
            o = i * L.NX_CIG
            st = self._cig(y, i)
            i_o = st.i_o
            row = out[i]
            omega, P, Q, vmag = row[L.OUT_OMEGA], row[L.OUT_P], row[L.OUT_Q], row[L.OUT_VMAG]
            vnode[i] = to_global(st.v_o, st.delta)
            dy[o + L.INT_IND] = V_s - vmag if p[L.IND_ON] != 0.0 else 0.0

            gains = SimpleNamespace(Kp_vd=p[L.KP_VD], Ki_vd=p[L.KI_VD], Kp_v=p[L.KP_V], Ki_v=p[L.KI_V],
                                    Kp_i=p[L.KP_I], Ki_i=p[L.KI_I], F=p[L.FF], eps=p[L.EPS])
            filt = SimpleNamespace(R_f=p[L.RF], L_f=p[L.LF], C_f=p[L.CF])
            ints = SimpleNamespace(int_vd=y[o + L.INT_VD], int_v=(y[o + L.INT_V_D], y[o + L.INT_V_Q]),
                                   int_i=(y[o + L.INT_I_D], y[o + L.INT_I_Q]))

            if kind == L.KIND_PROPOSED:
                p_star = power_setpoint(self._p_nom(t, p), p[L.P_VAV], row[L.OUT_P_VIND])
                v_set = vd_setpoint(p_star, i_o[0], p[L.EPS])
                v_star = (outer_voltage_pi(v_set, st.v_o[0], gains, ints), 0.0)
                dy[o + L.INT_VD] = v_set - st.v_o[0]
                if p[L.SEC_F_ON] != 0.0:
                    own = sharing_signal(Q, row[L.OUT_Q_BASE], p[L.M_Q])
                    # held neighbour sums enter as one aggregated pseudo-neighbour
                    deg = p[L.DEG]
                    nbrs = [(deg, p[L.NBR_W] / deg, p[L.NBR_QH] / deg)] if deg > 0 else []
                    dy[o + L.WSTAR] = secondary_freq_rate(omega, w_s, own, nbrs, p[L.C_F], p[L.B_PIN])
            else:
                v_star = (y[o + L.VSTAR] - p[L.N_Q] * (Q - self._q_nom(t, p)), 0.0)
                prm = PfqvParams(m_p=p[L.M_P], n_q=p[L.N_Q], c_f=p[L.C_F], c_v=p[L.C_V],
                                 b_f=p[L.B_PIN], b_v=p[L.B_PIN_V])
                nbrs = []
                for j in range(c):
                    if self.adj[i, j] != 0.0:
                        pj = self.cigp[j]
                        nbrs.append((self.adj[i, j], out[j][L.OUT_OMEGA],
                                     p_sharing_signal(out[j][L.OUT_P], self._p_nom(t, pj), pj[L.M_P]),
                                     out[j][L.OUT_VMAG]))
                wdot, vdot = pfqv_secondary_rates(omega, vmag, p_sharing_signal(P, self._p_nom(t, p), p[L.M_P]),
                                                  nbrs, w_s, V_s, prm)
                if p[L.SEC_F_ON] != 0.0:
                    dy[o + L.WSTAR] = wdot
                if p[L.SEC_V_ON] != 0.0:
                    dy[o + L.VSTAR] = vdot

            i_s_star = voltage_loop(v_star, st.v_o, i_o, omega, gains, filt, ints)
            v_s = current_loop(i_s_star, st.i_s, omega, gains, filt, ints)
            v_s, saturated = limit_switching_voltage(v_s, p[L.VS_MAX])
            if not saturated:
                dy[o + L.INT_V_D] = v_star[0] - st.v_o[0]
                dy[o + L.INT_V_Q] = v_star[1] - st.v_o[1]
                dy[o + L.INT_I_D] = i_s_star[0] - st.i_s[0]
                dy[o + L.INT_I_Q] = i_s_star[1] - st.i_s[1]
            di, dv = cig_derivatives(st, v_s, omega, filt, i_o)
            dy[o + L.IS_D], dy[o + L.IS_Q] = di
            dy[o + L.VO_D], dy[o + L.VO_Q] = dv
            dy[o + L.DELTA] = omega - w_s

        ib0 = c * L.NX_CIG
        I = y[ib0:].reshape(-1, 2)
        if self.nu:
            inc = np.zeros((self.nu, self.nb))
            for k in range(self.nb):
                if self.br_a[k] >= c:
                    inc[self.br_a[k] - c, k] = 1.0
                if self.br_b[k] >= c:
                    inc[self.br_b[k] - c, k] = -1.0
            if int(self.gp[L.G_CLOSURE]) == L.CLOSURE_SHUNT:
                vnode[c:] = self.gp[L.G_R_SHUNT] * (-inc @ I)
            else:
                known = np.zeros((self.nb, 2))
                for k in range(self.nb):
                    a, b = self.br_a[k], self.br_b[k]
                    Va = vnode[a] if 0 <= a < c else 0.0
                    Vb = vnode[b] if 0 <= b < c else 0.0
                    known[k] = Va - Vb
                KI = np.column_stack([I[:, 1], -I[:, 0]])
                rhs = inc @ ((self.br_R[:, None] * I - known) / self.br_L[:, None]) - w_s * (inc @ KI)
                vnode[c:] = self.minv @ rhs

        for k in range(self.nb):
            a, b = self.br_a[k], self.br_b[k]
            Va = vnode[a] if a != GROUND else (0.0, 0.0)
            Vb = vnode[b] if b != GROUND else (0.0, 0.0)
            Ik = I[k]
            dy[ib0 + 2 * k] = (-self.br_R[k] * Ik[0] + Va[0] - Vb[0]) / self.br_L[k] + w_s * Ik[1]
            dy[ib0 + 2 * k + 1] = (-self.br_R[k] * Ik[1] + Va[1] - Vb[1]) / self.br_L[k] - w_s * Ik[0]
        return dy

    # -- public interface --------------------------------------------------
    def rhs(self, t, y):
        return self._deriv(t, np.asarray(y, dtype=float))

    def outputs(self, t, y):
        return np.array(self._measure_all(t, np.asarray(y, dtype=float)))

    def bus_voltages(self, t, y):
        self._deriv(t, np.asarray(y, dtype=float))
        return self._vnode.copy()

    def integrate(self, y, step0, n_steps, dt, decim, rec):
        r = 0
        for s in range(n_steps):
            k = step0 + s
            t = k * dt
            k1 = self._deriv(t, y)
            k2 = self._deriv(t + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = self._deriv(t + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = self._deriv((k + 1) * dt, y + dt * k3)
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not math.isfinite(float(np.sum(y))):
                bad = np.flatnonzero(~np.isfinite(y))
                return 1, r, int(bad[0]) if bad.size else 0
            if decim > 0 and (k + 1) % decim == 0:
                rec[r] = self._measure_all((k + 1) * dt, y)
                r += 1
        return 0, r, -1
