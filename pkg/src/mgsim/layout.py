"""Packed array layout shared by the compiled and pure-Python kernels.

The kernels see the whole simulation as flat float64 arrays:

``y``
    ``NX_CIG`` states per CIG followed by one (D, Q) current pair per branch.
    Branches are ordered connectors (one per CIG, same order as the CIGs),
    then lines, then loads.
``cigp``
    ``(c, NP_CIG)`` per-CIG parameters and held discrete inputs.
``gp``
    ``NG`` global scalars.

The Cython module mirrors these indices in a ``cdef enum``;
``tests/test_kernel.py`` checks both agree through ``layout_signature``.
"""

# --- per-CIG continuous states -------------------------------------------
IS_D = 0        # switching current, local d (A)
IS_Q = 1
VO_D = 2        # capacitor/output voltage, local d (V)
VO_Q = 3
DELTA = 4       # frame angle (rad, unwrapped)
WSTAR = 5       # frequency setpoint omega* (rad/s)
INT_VD = 6      # integral of (v_od_set - v_od)
INT_V_D = 7     # voltage-loop integrator
INT_V_Q = 8
INT_I_D = 9     # current-loop integrator
INT_I_Q = 10
INT_IND = 11    # integral of (V_s - |v_o|); shared by the P and Q individual PIs
VSTAR = 12      # PFQV voltage setpoint (V)
NX_CIG = 13

CIG_STATE_NAMES = (
    "i_s_d", "i_s_q", "v_o_d", "v_o_q", "delta", "omega_star", "int_vd",
    "int_v_d", "int_v_q", "int_i_d", "int_i_q", "int_ind", "v_star",
)

# --- per-CIG parameter columns --------------------------------------------
RF = 0
LF = 1
CF = 2
KP_VD = 3
KI_VD = 4
KP_V = 5
KI_V = 6
KP_I = 7
KI_I = 8
FF = 9          # current feed-forward gain
EPS = 10
M_Q = 11        # Q-omega droop coefficient
KP_P = 12       # individual voltage control gains
KI_P = 13
KP_Q = 14
KI_Q = 15
IND_ON = 16     # 1.0 once individual voltage control is triggered
B_PIN = 17      # pinning gain
C_F = 18        # secondary coupling gain (frequency)
SEC_F_ON = 19
P_VAV = 20      # held average-voltage power contribution (W)
NBR_W = 21      # sum of held neighbour omega_hat
NBR_QH = 22     # sum of held neighbour sharing signals
DEG = 23        # communication degree
M_P = 24        # PFQV P-omega droop
N_Q = 25        # PFQV Q-V droop
C_V = 26        # PFQV secondary voltage coupling gain
SEC_V_ON = 27
VS_MAX = 28     # switching-voltage magnitude limit (inf = none)
P_NOM0 = 29     # P_nom ramp: value before T0, linear to P_NOM1 at T1
P_NOM1 = 30
P_T0 = 31
P_T1 = 32
Q_NOM0 = 33
Q_NOM1 = 34
Q_T0 = 35
Q_T1 = 36
B_PIN_V = 37    # PFQV voltage pinning gain
NP_CIG = 38

# --- global scalars -------------------------------------------------------
G_OMEGA_S = 0
G_V_S = 1
G_KIND = 2      # 0 proposed controller, 1 PFQV baseline
G_CLOSURE = 3   # 0 inductive KCL elimination, 1 virtual shunt
G_R_SHUNT = 4
NG = 5

KIND_PROPOSED = 0
KIND_PFQV = 1
CLOSURE_KCL = 0
CLOSURE_SHUNT = 1

# --- per-CIG recorded outputs ---------------------------------------------
OUT_OMEGA = 0
OUT_VMAG = 1
OUT_P = 2
OUT_Q = 3
OUT_P_VIND = 4
OUT_Q_VIND = 5
OUT_Q_BASE = 6
N_OUT = 7

# Kernel status codes.
STATUS_OK = 0
STATUS_NONFINITE = 1


def layout_signature():
    return (NX_CIG, NP_CIG, NG, N_OUT, VSTAR, B_PIN_V, G_R_SHUNT, OUT_Q_BASE)
