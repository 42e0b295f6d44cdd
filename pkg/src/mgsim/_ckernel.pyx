# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernel for the microgrid plant and its continuous controllers.

Mirrors ``mgsim._pykernel`` step for step; see ``mgsim.layout`` for the
array conventions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fabs, isfinite

cnp.import_array()

cdef enum:
    IS_D = 0
    IS_Q = 1
    VO_D = 2
    VO_Q = 3
    DELTA = 4
    WSTAR = 5
    INT_VD = 6
    INT_V_D = 7
    INT_V_Q = 8
    INT_I_D = 9
    INT_I_Q = 10
    INT_IND = 11
    VSTAR = 12
    NX_CIG = 13

cdef enum:
    RF = 0
    LF = 1
    CF = 2
    KP_VD = 3
    KI_VD = 4
    KP_V = 5
    KI_V = 6
    KP_I = 7
    KI_I = 8
    FF = 9
    EPS = 10
    M_Q = 11
    KP_P = 12
    KI_P = 13
    KP_Q = 14
    KI_Q = 15
    IND_ON = 16
    B_PIN = 17
    C_F = 18
    SEC_F_ON = 19
    P_VAV = 20
    NBR_W = 21
    NBR_QH = 22
    DEG = 23
    M_P = 24
    N_Q = 25
    C_V = 26
    SEC_V_ON = 27
    VS_MAX = 28
    P_NOM0 = 29
    P_NOM1 = 30
    P_T0 = 31
    P_T1 = 32
    Q_NOM0 = 33
    Q_NOM1 = 34
    Q_T0 = 35
    Q_T1 = 36
    B_PIN_V = 37
    NP_CIG = 38

cdef enum:
    G_OMEGA_S = 0
    G_V_S = 1
    G_KIND = 2
    G_CLOSURE = 3
    G_R_SHUNT = 4
    NG = 5

cdef enum:
    OUT_OMEGA = 0
    OUT_VMAG = 1
    OUT_P = 2
    OUT_Q = 3
    OUT_P_VIND = 4
    OUT_Q_VIND = 5
    OUT_Q_BASE = 6
    N_OUT = 7


def layout_signature():
    return (NX_CIG, NP_CIG, NG, N_OUT, VSTAR, B_PIN_V, G_R_SHUNT, OUT_Q_BASE)


cdef inline double _ramp(double t, double v0, double v1, double t0, double t1) nogil:
    if t <= t0:
        return v0
    if t >= t1:
        return v1
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


cdef class Kernel:
    """Derivative, output and RK4 integration over packed arrays.

    The arrays are held by reference; the engine mutates ``cigp``, ``gp``,
    ``br_R``, ``br_L`` and ``minv`` in place between calls.
    """

    cdef public object cigp_arr, gp_arr, br_a_arr, br_b_arr, br_R_arr, br_L_arr, minv_arr, adj_arr
    cdef double[:, ::1] cigp
    cdef double[::1] gp
    cdef int[::1] br_a
    cdef int[::1] br_b
    cdef double[::1] br_R
    cdef double[::1] br_L
    cdef double[:, ::1] minv
    cdef double[:, ::1] adj
    cdef readonly int c, nb, nu, n
    # scratch
    cdef double[:, ::1] out
    cdef double[:, ::1] vnode
    cdef double[:, ::1] nrhs
    cdef double[::1] k1, k2, k3, k4, ytmp

    def __init__(self, cigp, gp, br_a, br_b, br_R, br_L, minv, adj):
        self.cigp_arr = cigp
        self.gp_arr = gp
        self.br_a_arr = br_a
        self.br_b_arr = br_b
        self.br_R_arr = br_R
        self.br_L_arr = br_L
        self.minv_arr = minv
        self.adj_arr = adj
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
        self.n = self.c * NX_CIG + 2 * self.nb
        self.out = np.zeros((self.c, N_OUT))
        self.vnode = np.zeros((self.c + self.nu, 2))
        self.nrhs = np.zeros((max(self.nu, 1), 2))
        self.k1 = np.zeros(self.n)
        self.k2 = np.zeros(self.n)
        self.k3 = np.zeros(self.n)
        self.k4 = np.zeros(self.n)
        self.ytmp = np.zeros(self.n)

    cdef void _outputs(self, double t, double[::1] y) noexcept nogil:
        cdef int i, o
        cdef double cd, sd, ID, IQ, iod, ioq, vod, voq, P, Q, vmag, e
        cdef double pvind, qvind, qbase, pnom, om
        cdef double V_s = self.gp[G_V_S]
        cdef int kind = <int>self.gp[G_KIND]
        cdef int ib0 = self.c * NX_CIG
        for i in range(self.c):
            o = i * NX_CIG
            cd = cos(y[o + DELTA])
            sd = sin(y[o + DELTA])
            ID = y[ib0 + 2 * i]
            IQ = y[ib0 + 2 * i + 1]
            iod = cd * ID + sd * IQ
            ioq = -sd * ID + cd * IQ
            vod = y[o + VO_D]
            voq = y[o + VO_Q]
            P = vod * iod + voq * ioq
            Q = voq * iod - vod * ioq
            vmag = sqrt(vod * vod + voq * voq)
            if self.cigp[i, IND_ON] != 0.0:
                e = V_s - vmag
                pvind = self.cigp[i, KP_P] * e + self.cigp[i, KI_P] * y[o + INT_IND]
                qvind = self.cigp[i, KP_Q] * e + self.cigp[i, KI_Q] * y[o + INT_IND]
            else:
                pvind = 0.0
                qvind = 0.0
            qbase = _ramp(t, self.cigp[i, Q_NOM0], self.cigp[i, Q_NOM1],
                          self.cigp[i, Q_T0], self.cigp[i, Q_T1]) + qvind
            if kind == 0:
                om = y[o + WSTAR] + self.cigp[i, M_Q] * (Q - qbase)
            else:
                pnom = _ramp(t, self.cigp[i, P_NOM0], self.cigp[i, P_NOM1],
                             self.cigp[i, P_T0], self.cigp[i, P_T1])
                om = y[o + WSTAR] - self.cigp[i, M_P] * (P - pnom)
            self.out[i, OUT_OMEGA] = om
            self.out[i, OUT_VMAG] = vmag
            self.out[i, OUT_P] = P
            self.out[i, OUT_Q] = Q
            self.out[i, OUT_P_VIND] = pvind
            self.out[i, OUT_Q_VIND] = qvind
            self.out[i, OUT_Q_BASE] = qbase

    cdef void _deriv(self, double t, double[::1] y, double[::1] dy) noexcept nogil:
        cdef int i, j, o, k, a, b, h, nn
        cdef double cd, sd, ID, IQ, iod, ioq, vod, voq, isd, isq
        cdef double om, P, Q, vmag, qbase, pnom, qnom, pstar, sgn, vset, evd
        cdef double vodst, voqst, evd_, evq_, isdst, isqst, eid, eiq, vsd, vsq
        cdef double vsmag, lim, scale, Rf, Lf, Cf, wdot, vdot, s, acc, hv, rsh
        cdef double aw
        cdef double w_s = self.gp[G_OMEGA_S]
        cdef double V_s = self.gp[G_V_S]
        cdef int kind = <int>self.gp[G_KIND]
        cdef int closure = <int>self.gp[G_CLOSURE]
        cdef int c = self.c
        cdef int ib0 = c * NX_CIG
        cdef double R, L, Ia, Ib, Va_d, Va_q, Vb_d, Vb_q

        self._outputs(t, y)

        for i in range(c):
            o = i * NX_CIG
            cd = cos(y[o + DELTA])
            sd = sin(y[o + DELTA])
            ID = y[ib0 + 2 * i]
            IQ = y[ib0 + 2 * i + 1]
            iod = cd * ID + sd * IQ
            ioq = -sd * ID + cd * IQ
            isd = y[o + IS_D]
            isq = y[o + IS_Q]
            vod = y[o + VO_D]
            voq = y[o + VO_Q]
            om = self.out[i, OUT_OMEGA]
            P = self.out[i, OUT_P]
            Q = self.out[i, OUT_Q]
            vmag = self.out[i, OUT_VMAG]
            qbase = self.out[i, OUT_Q_BASE]
            Rf = self.cigp[i, RF]
            Lf = self.cigp[i, LF]
            Cf = self.cigp[i, CF]

            # CIG node voltage in the common frame
            self.vnode[i, 0] = cd * vod - sd * voq
            self.vnode[i, 1] = sd * vod + cd * voq

            if self.cigp[i, IND_ON] != 0.0:
                dy[o + INT_IND] = V_s - vmag
            else:
                dy[o + INT_IND] = 0.0

            if kind == 0:
                pnom = _ramp(t, self.cigp[i, P_NOM0], self.cigp[i, P_NOM1],
                             self.cigp[i, P_T0], self.cigp[i, P_T1])
                pstar = pnom + self.cigp[i, P_VAV] + self.out[i, OUT_P_VIND]
                sgn = 1.0 if iod >= 0.0 else -1.0
                vset = sgn * pstar / (fabs(iod) + self.cigp[i, EPS])
                evd = vset - vod
                vodst = self.cigp[i, KP_VD] * evd + self.cigp[i, KI_VD] * y[o + INT_VD]
                voqst = 0.0
                dy[o + INT_VD] = evd
                if self.cigp[i, SEC_F_ON] != 0.0:
                    dy[o + WSTAR] = -self.cigp[i, C_F] * (
                        self.cigp[i, B_PIN] * (om - w_s)
                        + self.cigp[i, DEG] * (om - self.cigp[i, M_Q] * (Q - qbase))
                        - self.cigp[i, NBR_W] + self.cigp[i, NBR_QH])
                else:
                    dy[o + WSTAR] = 0.0
                dy[o + VSTAR] = 0.0
            else:
                qnom = _ramp(t, self.cigp[i, Q_NOM0], self.cigp[i, Q_NOM1],
                             self.cigp[i, Q_T0], self.cigp[i, Q_T1])
                vodst = y[o + VSTAR] - self.cigp[i, N_Q] * (Q - qnom)
                voqst = 0.0
                dy[o + INT_VD] = 0.0
                if self.cigp[i, SEC_F_ON] != 0.0:
                    # continuous exchange: neighbour values are live
                    pnom = _ramp(t, self.cigp[i, P_NOM0], self.cigp[i, P_NOM1],
                                 self.cigp[i, P_T0], self.cigp[i, P_T1])
                    acc = self.cigp[i, B_PIN] * (om - w_s)
                    for j in range(c):
                        if self.adj[i, j] != 0.0:
                            acc = acc + self.adj[i, j] * (
                                om - self.out[j, OUT_OMEGA]
                                + self.cigp[i, M_P] * (P - pnom)
                                - self.cigp[j, M_P] * (self.out[j, OUT_P] - _ramp(
                                    t, self.cigp[j, P_NOM0], self.cigp[j, P_NOM1],
                                    self.cigp[j, P_T0], self.cigp[j, P_T1])))
                    dy[o + WSTAR] = -self.cigp[i, C_F] * acc
                else:
                    dy[o + WSTAR] = 0.0
                if self.cigp[i, SEC_V_ON] != 0.0:
                    acc = self.cigp[i, B_PIN_V] * (vmag - V_s)
                    for j in range(c):
                        if self.adj[i, j] != 0.0:
                            acc = acc + self.adj[i, j] * (vmag - self.out[j, OUT_VMAG])
                    dy[o + VSTAR] = -self.cigp[i, C_V] * acc
                else:
                    dy[o + VSTAR] = 0.0

            # voltage loop
            evd_ = vodst - vod
            evq_ = voqst - voq
            isdst = (self.cigp[i, FF] * iod - Cf * om * voq
                     + self.cigp[i, KP_V] * evd_ + self.cigp[i, KI_V] * y[o + INT_V_D])
            isqst = (self.cigp[i, FF] * ioq + Cf * om * vod
                     + self.cigp[i, KP_V] * evq_ + self.cigp[i, KI_V] * y[o + INT_V_Q])
            # current loop
            eid = isdst - isd
            eiq = isqst - isq
            vsd = -Lf * om * isq + self.cigp[i, KP_I] * eid + self.cigp[i, KI_I] * y[o + INT_I_D]
            vsq = Lf * om * isd + self.cigp[i, KP_I] * eiq + self.cigp[i, KI_I] * y[o + INT_I_Q]
            aw = 1.0
            lim = self.cigp[i, VS_MAX]
            vsmag = sqrt(vsd * vsd + vsq * vsq)
            if vsmag > lim:
                scale = lim / vsmag
                vsd = vsd * scale
                vsq = vsq * scale
                aw = 0.0
            dy[o + INT_V_D] = aw * evd_
            dy[o + INT_V_Q] = aw * evq_
            dy[o + INT_I_D] = aw * eid
            dy[o + INT_I_Q] = aw * eiq

            # LC filter
            dy[o + IS_D] = (-Rf * isd + vsd - vod) / Lf + om * isq
            dy[o + IS_Q] = (-Rf * isq + vsq - voq) / Lf - om * isd
            dy[o + VO_D] = (isd - iod) / Cf + om * voq
            dy[o + VO_Q] = (isq - ioq) / Cf - om * vod
            dy[o + DELTA] = om - w_s

        # network bus voltages
        nn = self.nu
        if nn > 0:
            for h in range(nn):
                self.nrhs[h, 0] = 0.0
                self.nrhs[h, 1] = 0.0
            if closure == 0:
                for k in range(self.nb):
                    a = self.br_a[k]
                    b = self.br_b[k]
                    R = self.br_R[k]
                    L = self.br_L[k]
                    Ia = y[ib0 + 2 * k]
                    Ib = y[ib0 + 2 * k + 1]
                    # sum_k A_hk [(R I - V_known_part)/L] - w_s K sum_k A_hk I
                    if a >= c:
                        h = a - c
                        self.nrhs[h, 0] += R * Ia / L - w_s * Ib
                        self.nrhs[h, 1] += R * Ib / L + w_s * Ia
                        if 0 <= b < c:
                            self.nrhs[h, 0] += self.vnode[b, 0] / L
                            self.nrhs[h, 1] += self.vnode[b, 1] / L
                    if b >= c:
                        h = b - c
                        self.nrhs[h, 0] -= R * Ia / L - w_s * Ib
                        self.nrhs[h, 1] -= R * Ib / L + w_s * Ia
                        if 0 <= a < c:
                            self.nrhs[h, 0] += self.vnode[a, 0] / L
                            self.nrhs[h, 1] += self.vnode[a, 1] / L
                for h in range(nn):
                    hv = 0.0
                    s = 0.0
                    for j in range(nn):
                        hv = hv + self.minv[h, j] * self.nrhs[j, 0]
                        s = s + self.minv[h, j] * self.nrhs[j, 1]
                    self.vnode[c + h, 0] = hv
                    self.vnode[c + h, 1] = s
            else:
                rsh = self.gp[G_R_SHUNT]
                for k in range(self.nb):
                    a = self.br_a[k]
                    b = self.br_b[k]
                    Ia = y[ib0 + 2 * k]
                    Ib = y[ib0 + 2 * k + 1]
                    if a >= c:
                        self.nrhs[a - c, 0] -= Ia
                        self.nrhs[a - c, 1] -= Ib
                    if b >= c:
                        self.nrhs[b - c, 0] += Ia
                        self.nrhs[b - c, 1] += Ib
                for h in range(nn):
                    self.vnode[c + h, 0] = rsh * self.nrhs[h, 0]
                    self.vnode[c + h, 1] = rsh * self.nrhs[h, 1]

        # branch currents
        for k in range(self.nb):
            a = self.br_a[k]
            b = self.br_b[k]
            R = self.br_R[k]
            L = self.br_L[k]
            Ia = y[ib0 + 2 * k]
            Ib = y[ib0 + 2 * k + 1]
            if a >= 0:
                Va_d = self.vnode[a, 0]
                Va_q = self.vnode[a, 1]
            else:
                Va_d = 0.0
                Va_q = 0.0
            if b >= 0:
                Vb_d = self.vnode[b, 0]
                Vb_q = self.vnode[b, 1]
            else:
                Vb_d = 0.0
                Vb_q = 0.0
            dy[ib0 + 2 * k] = (-R * Ia + Va_d - Vb_d) / L + w_s * Ib
            dy[ib0 + 2 * k + 1] = (-R * Ib + Va_q - Vb_q) / L - w_s * Ia

    def rhs(self, double t, y):
        """Time derivative of the packed state ``y`` at time ``t``."""
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        dy = np.zeros(self.n)
        cdef double[::1] dv = dy
        self._deriv(t, yv, dv)
        return dy

    def outputs(self, double t, y):
        """Per-CIG ``(c, N_OUT)`` measurement array at ``(t, y)``."""
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        self._outputs(t, yv)
        return np.array(self.out, copy=True)

    def bus_voltages(self, double t, y):
        """Node voltages (CIG nodes first, then network buses), common frame."""
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        dy = np.zeros(self.n)
        cdef double[::1] dv = dy
        self._deriv(t, yv, dv)
        return np.array(self.vnode, copy=True)

    def integrate(self, double[::1] y, long step0, long n_steps, double dt,
                  long decim, double[:, :, ::1] rec):
        """Advance ``y`` in place by ``n_steps`` RK4 steps.

        Step ``k`` runs from ``t = k * dt``; starting at ``step0``. After every
        step whose index is a multiple of ``decim`` the outputs are written to
        the next row of ``rec``. Returns ``(status, rows_written, bad_index)``.
        """
        cdef long s, k, r = 0
        cdef int idx, i, o, bad = -1
        cdef int n = self.n
        cdef double t, h2 = 0.5 * dt, acc
        cdef double[::1] k1 = self.k1
        cdef double[::1] k2 = self.k2
        cdef double[::1] k3 = self.k3
        cdef double[::1] k4 = self.k4
        cdef double[::1] yt = self.ytmp
        with nogil:
            for s in range(n_steps):
                k = step0 + s
                t = k * dt
                self._deriv(t, y, k1)
                for idx in range(n):
                    yt[idx] = y[idx] + h2 * k1[idx]
                self._deriv(t + h2, yt, k2)
                for idx in range(n):
                    yt[idx] = y[idx] + h2 * k2[idx]
                self._deriv(t + h2, yt, k3)
                for idx in range(n):
                    yt[idx] = y[idx] + dt * k3[idx]
                self._deriv((k + 1) * dt, yt, k4)
                acc = 0.0
                for idx in range(n):
                    y[idx] = y[idx] + dt / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx])
                    acc = acc + y[idx]
                if not isfinite(acc):
                    for idx in range(n):
                        if not isfinite(y[idx]):
                            bad = idx
                            break
                    if bad < 0:
                        bad = 0
                    break
                if decim > 0 and (k + 1) % decim == 0:
                    self._outputs((k + 1) * dt, y)
                    for i in range(self.c):
                        for o in range(N_OUT):
                            rec[r, i, o] = self.out[i, o]
                    r = r + 1
        if bad >= 0:
            return 1, r, bad
        return 0, r, -1
