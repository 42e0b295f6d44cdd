"""Steady-state summary metrics and the cross-case ordering report."""

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

FREQ_TOL = 1e-3          # rad/s, restoration band
RECOVERY_DELAY = 5.0     # s after a disturbance
DP_WINDOW = 1.0          # s after a load step for the |dP| peak
MARGIN = 0.10            # relative margin for strict orderings
VOLT_EXACT_TOL = 0.5     # V, "exact" regulation band

_F = {"omega": 0, "vmag": 1, "P": 2, "Q": 3, "vbar_est": 4, "P_Vav": 5, "P_Vind": 6, "Q_Vind": 7}


def dispersion(values):
    """Largest pairwise difference relative to the mean magnitude.

    Zero for identical values; 0.01 means the worst pair differs by 1% of
    the typical per-CIG value.
    """
    x = np.asarray(values, dtype=float)
    scale = np.mean(np.abs(x))
    if scale == 0.0:
        return 0.0
    return float((x.max() - x.min()) / scale)


def relative_margin(a, b):
    """How much larger ``b`` is than ``a``, relative to the larger magnitude."""
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else (b - a) / scale


def electrical_distances(net, omega_s, from_bus):
    """Impedance-magnitude shortest-path distance from a bus to every CIG node."""
    n = net.c + net.n_buses
    rows, cols, w = [], [], []
    for a, b, R, Lk in zip(net.br_a, net.br_b, net.br_R, net.br_L):
        if b < 0:
            continue
        z = float(np.hypot(R, omega_s * Lk))
        rows += [a, b]
        cols += [b, a]
        w += [z, z]
    g = csr_matrix((w, (rows, cols)), shape=(n, n))
    dist = dijkstra(g, directed=False, indices=net.node_of_bus[from_bus])
    return dist[:net.c]


def _times(cfg, n_rows):
    return (np.arange(n_rows) + 1) * cfg.decimation


def summarize(cfg, trace, net=None):
    t = _times(cfg, trace.shape[0])
    win = t > t[-1] - cfg.window + 1e-12
    w = trace[win]
    omega, vmag, P, Q = (w[:, :, _F[k]] for k in ("omega", "vmag", "P", "Q"))
    vmean = vmag.mean(axis=0)
    Pm = P.mean(axis=0)
    Qm = Q.mean(axis=0)
    ferr = np.abs(trace[:, :, _F["omega"]] - cfg.omega_s)
    s = {
        "case": cfg.name,
        "controller": cfg.controller,
        "fingerprint": cfg.fingerprint(),
        "duration": cfg.timing.duration,
        "dt": cfg.timing.dt,
        "rows": int(trace.shape[0]),
        "window": cfg.window,
        "freq_error_ss": float(np.abs(omega - cfg.omega_s).max()),
        "vmag_mean": vmean.tolist(),
        "voltage_error": np.abs(vmean - cfg.V_s).tolist(),
        "voltage_error_max": float(np.abs(vmean - cfg.V_s).max()),
        "mean_voltage": float(vmean.mean()),
        "P_mean": Pm.tolist(),
        "Q_mean": Qm.tolist(),
        "P_dispersion": dispersion(Pm),
        "Q_dispersion": dispersion(Qm),
        "ind_abs_max": float(np.abs(trace[:, :, [_F["P_Vind"], _F["Q_Vind"]]]).max()),
    }

    disturbances = [e for e in cfg.events if e.kind in ("trigger_ind_voltage", "load_step")]
    times = sorted({e.time for e in disturbances})
    recov = []
    for k, te in enumerate(times):
        t_next = times[k + 1] if k + 1 < len(times) else t[-1] + 1e-9
        sel = (t >= te + RECOVERY_DELAY - 1e-9) & (t < t_next)
        err = float(ferr[sel].max()) if sel.any() else None
        after = (t > te) & (t < t_next)
        bad = np.flatnonzero(after & (ferr.max(axis=1) > FREQ_TOL))
        settle = float(t[bad[-1]] - te) if bad.size else 0.0
        recov.append({"time": te, "freq_error_after_5s": err, "settling_time": settle,
                      "restored": err is not None and err <= FREQ_TOL})
    s["disturbances"] = recov

    steps = []
    for e in cfg.events:
        if e.kind != "load_step":
            continue
        i0 = np.searchsorted(t, e.time - 1e-12) - 1
        sel = (t > e.time) & (t <= e.time + DP_WINDOW)
        if i0 < 0 or not sel.any():
            continue
        P_all = trace[:, :, _F["P"]]
        dP = np.abs(P_all[sel] - P_all[i0]).max(axis=0)
        entry = {"time": e.time, "load": e.data["load"], "dP_peak": dP.tolist(),
                 "largest_dP_cig": cfg.cig_ids[int(np.argmax(dP))]}
        if net is not None:
            bus = cfg.loads[cfg.load_ids.index(e.data["load"])].bus
            d = electrical_distances(net, cfg.omega_s, bus)
            entry["distance"] = d.tolist()
            entry["nearest_cig"] = cfg.cig_ids[int(np.argmin(d))]
        steps.append(entry)
    s["load_steps"] = steps
    return s


def compare_cases(summaries):
    """Ordering report over the four reference cases (given in case order).

    Returns ``{"checks": [...], "passed": bool}``.
    """
    if len(summaries) != 4:
        raise ValueError(f"expected 4 summaries (cases 1-4), got {len(summaries)}")
    fps = {s.get("fingerprint") for s in summaries}
    if len(fps) != 1:
        raise ValueError("summaries come from different topologies or disturbance schedules")
    q = [s["Q_dispersion"] for s in summaries]
    p = [s["P_dispersion"] for s in summaries]
    v = [s["voltage_error_max"] for s in summaries]
    checks = []

    def less(name, a, b):
        m = relative_margin(a, b)
        checks.append({"check": name, "lhs": a, "rhs": b, "margin": m, "passed": bool(a < b and m >= MARGIN)})

    less("Q_dispersion case1 < case2", q[0], q[1])
    less("Q_dispersion case2 < case3", q[1], q[2])
    less("Q_dispersion case3 < case4", q[2], q[3])
    less("P_dispersion case1 < case2", p[0], p[1])
    less("P_dispersion case4 < case2", p[3], p[1])
    less("P_dispersion case2 < case3", p[1], p[2])
    less("voltage_error case2 < case1", v[1], v[0])
    less("voltage_error case3 < case2", v[2], v[1])
    checks.append({"check": "voltage_error case3 ~ case4", "lhs": v[2], "rhs": v[3],
                   "margin": abs(v[2] - v[3]),
                   "passed": bool(v[2] <= VOLT_EXACT_TOL and v[3] <= VOLT_EXACT_TOL)})
    return {"checks": checks, "passed": all(c["passed"] for c in checks)}
