"""Fixed-step hybrid simulation: RK4 plant + t1 comm rounds + t2 voltage
sampling + scenario events, with CSV trace and JSON summary output."""

import dataclasses
import json
import logging
import time as _time
from pathlib import Path

import numpy as np

from mgsim import layout as L
from mgsim.comm import Channel, Message
from mgsim.freq_control import SecondaryFreqState
from mgsim.kernel import BACKEND, Kernel, PyKernel
from mgsim.metrics import summarize
from mgsim.voltage_reg import (AvgVoltPI, BandTrigger, ConsensusState, avg_volt_pi_step, consensus_step,
                               default_consensus_gain, sample_input)

log = logging.getLogger(__name__)

TRACE_FIELDS = ("omega", "vmag", "P", "Q", "vbar_est", "P_Vav", "P_Vind", "Q_Vind")
_FROM_OUT = {"omega": L.OUT_OMEGA, "vmag": L.OUT_VMAG, "P": L.OUT_P, "Q": L.OUT_Q,
             "P_Vind": L.OUT_P_VIND, "Q_Vind": L.OUT_Q_VIND}


class NumericalAbort(RuntimeError):
    def __init__(self, t, variable, value, state):
        self.t = t
        self.variable = variable
        self.value = value
        self.state = state
        super().__init__(f"non-finite state at t={t:.6f} s: {variable} = {value}")


def build_arrays(cfg):
    """Pack a scenario into the kernel's parameter arrays and initial state."""
    net = cfg.network()
    c = cfg.c
    cigp = np.zeros((c, L.NP_CIG))
    g = cfg.inner
    for i, p in enumerate(cfg.cigs):
        row = cigp[i]
        row[L.RF], row[L.LF], row[L.CF] = p.R_f, p.L_f, p.C_f
        row[L.KP_VD], row[L.KI_VD] = g.Kp_vd, g.Ki_vd
        row[L.KP_V], row[L.KI_V], row[L.KP_I], row[L.KI_I] = g.Kp_v, g.Ki_v, g.Kp_i, g.Ki_i
        row[L.FF], row[L.EPS], row[L.VS_MAX] = g.F, g.eps, g.vs_max
        row[L.M_Q] = cfg.m[i]
        row[L.M_P], row[L.N_Q], row[L.C_V] = cfg.pfqv.m_p, cfg.pfqv.n_q, cfg.pfqv.c_v
        row[L.C_F] = cfg.pfqv.c_f if cfg.kind == "pfqv" else cfg.c_f
        row[L.P_NOM0] = row[L.P_NOM1] = cfg.P_nom
        row[L.Q_NOM0] = row[L.Q_NOM1] = cfg.Q_nom
    cigp[cfg.pinned, L.B_PIN] = cfg.b
    cigp[cfg.pinned, L.B_PIN_V] = cfg.pfqv.b_v if cfg.pfqv.b_v > 0 else cfg.b

    gp = np.zeros(L.NG)
    gp[L.G_OMEGA_S] = cfg.omega_s
    gp[L.G_V_S] = cfg.V_s
    gp[L.G_KIND] = L.KIND_PFQV if cfg.kind == "pfqv" else L.KIND_PROPOSED
    gp[L.G_CLOSURE] = L.CLOSURE_SHUNT if cfg.closure == "shunt" else L.CLOSURE_KCL
    gp[L.G_R_SHUNT] = cfg.r_shunt

    minv = np.ascontiguousarray(net.kcl_matrix())
    adj = np.ascontiguousarray(cfg.comm.adjacency, dtype=float)
    y = np.zeros(c * L.NX_CIG + 2 * net.n_branches)
    for i in range(c):
        y[i * L.NX_CIG + L.WSTAR] = cfg.omega_s
        y[i * L.NX_CIG + L.VSTAR] = cfg.V_s
    return net, cigp, gp, minv, adj, y


def state_names(cfg):
    names = [f"cig{cid}.{s}" for cid in cfg.cig_ids for s in L.CIG_STATE_NAMES]
    branches = [f"connector{cid}" for cid in cfg.cig_ids]
    branches += [f"line{p.from_bus}-{p.to_bus}" for p in cfg.lines]
    branches += [f"load{lid}" for lid in cfg.load_ids]
    for b in branches:
        names += [f"{b}.I_D", f"{b}.I_Q"]
    return names


class Simulation:
    """One scenario run. ``step`` advances one RK4 step; ``run`` the whole horizon.

    Discrete work for step index ``k`` (due events, then the comm round when
    ``k`` is a multiple of the t1 step count) happens exactly once, before
    the step integrating from ``t = k * dt``.
    """

    def __init__(self, cfg, backend=None):
        self.cfg = cfg
        tm = cfg.timing
        self.dt = tm.dt
        self.n1 = tm.steps_per_t1
        self.m2 = tm.rounds_per_t2
        self.n_total = tm.n_steps
        self.decim = cfg.decim_steps
        self.net, self.cigp, self.gp, self.minv, self.adj, self.y = build_arrays(cfg)
        kcls = {None: Kernel, "python": PyKernel}.get(backend, backend)
        if kcls == "cython":
            from mgsim.kernel import compiled_kernel
            kcls = compiled_kernel()
            if kcls is None:
                raise RuntimeError("compiled kernel requested but not built")
        self.backend = "python" if kcls is PyKernel else "cython"
        self.kernel = kcls(self.cigp, self.gp, self.net.br_a, self.net.br_b, self.net.br_R, self.net.br_L,
                           self.minv, self.adj)
        self.names = state_names(cfg)

        c = cfg.c
        k_I = cfg.k_I if cfg.k_I is not None else default_consensus_gain(self.adj)
        self.consensus = [ConsensusState(rho=cfg.rho, k_I=k_I) for _ in range(c)]
        self.avg_pi = [AvgVoltPI(cfg.avg_Kp, cfg.avg_Ki, cfg.n_share[i], tm.t2) for i in range(c)]
        self.freq = [SecondaryFreqState(cfg.omega_s, cfg.c_f, cfg.b if i == cfg.pinned else 0.0) for i in range(c)]
        self.band = None
        if cfg.band_trigger is not None:
            bt = cfg.band_trigger
            self.band = [BandTrigger(bt.threshold, bt.dwell, bt.mode) for _ in range(c)]
        self.triggered = [False] * c
        self.channel = Channel(cfg.comm, cfg.comm_drop, cfg.comm_delay, cfg.seed)
        self.vbar_est = np.zeros(c)
        self.consensus_on = False
        self.avg_pi_on = False

        self.events = sorted(cfg.events, key=lambda e: e.time)
        self._event_steps = [int(round(e.time / self.dt)) for e in self.events]
        self._next_event = 0
        self.k = 0
        self._prepared = -1
        self.applied = []
        self._dummy = np.zeros((1, c, L.N_OUT))

    @property
    def t(self):
        return self.k * self.dt

    # -- discrete work -----------------------------------------------------
    def _apply_event(self, ev):
        d = ev.data
        p = self.cigp
        if ev.kind == "load_step":
            idx = self.cfg.load_ids.index(d["load"])
            self.net.set_load(idx, float(d["R"]), float(d["L"]))
            self.minv[:] = self.net.kcl_matrix()
        elif ev.kind == "ramp_setpoint":
            cols = (L.P_NOM0, L.P_NOM1, L.P_T0, L.P_T1) if d["field"] == "P_nom" else (L.Q_NOM0, L.Q_NOM1, L.Q_T0, L.Q_T1)
            for i in d["cigs"]:
                p[i, cols[0]], p[i, cols[1]] = d["from"], d["to"]
                p[i, cols[2]], p[i, cols[3]] = ev.time, d["t_end"]
        elif ev.kind == "enable_controller":
            name = d["name"]
            if name in ("secondary_freq", "secondary"):
                p[:, L.SEC_F_ON] = 1.0
            if name in ("secondary_volt", "secondary"):
                p[:, L.SEC_V_ON] = 1.0
            if name == "consensus":
                self.consensus_on = True
            if name == "avg_volt_pi":
                self.consensus_on = self.avg_pi_on = True
        elif ev.kind == "trigger_ind_voltage":
            for i in d["cigs"]:
                self._trigger(i, d["mode"])
        self.applied.append((self.k, ev))
        log.debug("t=%.4f applied %s %s", self.t, ev.kind, ev.data)

    def _trigger(self, i, mode):
        g = self.cfg.ind_modes[mode]
        row = self.cigp[i]
        row[L.KP_P], row[L.KI_P], row[L.KP_Q], row[L.KI_Q] = g.Kp_P, g.Ki_P, g.Kp_Q, g.Ki_Q
        row[L.IND_ON] = 1.0
        self.y[i * L.NX_CIG + L.INT_IND] = 0.0
        self.triggered[i] = True

    def _comm_round(self):
        cfg = self.cfg
        kr = self.k // self.n1
        t = self.t
        out = self.kernel.outputs(t, self.y)
        vmag = out[:, L.OUT_VMAG]
        if self.band is not None:
            for i, bt in enumerate(self.band):
                if not self.triggered[i] and bt.update(t, vmag[i], cfg.V_s):
                    self._trigger(i, bt.mode)
        if cfg.kind == "pfqv":
            return
        if self.consensus_on and kr % self.m2 == 0:
            for i in range(cfg.c):
                est, self.consensus[i] = sample_input(self.consensus[i], float(vmag[i]))
                self.vbar_est[i] = est
                if self.avg_pi_on:
                    self.cigp[i, L.P_VAV] = avg_volt_pi_step(self.avg_pi[i], est, cfg.V_s)
        qhat = self.cigp[:, L.M_Q] * (out[:, L.OUT_Q] - out[:, L.OUT_Q_BASE])
        msgs = [Message(i, float(out[i, L.OUT_OMEGA]), float(qhat[i]), self.consensus[i].x, kr)
                for i in range(cfg.c)]
        inbox = self.channel.exchange(kr, msgs)
        for i, box in enumerate(inbox):
            fs = self.freq[i]
            fs.receive(box)
            held = list(fs.last_rx.values())
            self.cigp[i, L.DEG] = len(held)
            self.cigp[i, L.NBR_W] = sum(w for w, _ in held)
            self.cigp[i, L.NBR_QH] = sum(q for _, q in held)
            if self.consensus_on:
                self.consensus[i] = consensus_step(self.consensus[i], [(1.0, m.x) for m in box])

    def _prepare(self):
        if self._prepared == self.k:
            return
        while self._next_event < len(self.events) and self._event_steps[self._next_event] <= self.k:
            self._apply_event(self.events[self._next_event])
            self._next_event += 1
        if self.k % self.n1 == 0:
            self._comm_round()
        self._prepared = self.k

    # -- continuous integration --------------------------------------------
    def _next_boundary(self):
        nxt = (self.k // self.n1 + 1) * self.n1
        if self._next_event < len(self.events):
            nxt = min(nxt, max(self._event_steps[self._next_event], self.k + 1))
        return min(nxt, self.n_total)

    def _integrate(self, n, rec, decim):
        y0 = self.y.copy()
        status, rows, bad = self.kernel.integrate(self.y, self.k, n, self.dt, decim, rec)
        if status != 0:
            self._locate_abort(y0, n)
        self.k += n
        return rows

    def _locate_abort(self, y0, n):
        self.y[:] = y0
        for s in range(n):
            status, _, bad = self.kernel.integrate(self.y, self.k + s, 1, self.dt, 0, self._dummy)
            if status != 0:
                t = (self.k + s + 1) * self.dt
                raise NumericalAbort(t, self.names[bad], float(self.y[bad]), dict(zip(self.names, self.y.tolist())))
        raise NumericalAbort(self.t, "unknown", float("nan"), dict(zip(self.names, self.y.tolist())))

    def step(self):
        """One RK4 step, preceded by any discrete work due at the current instant."""
        self._prepare()
        self._integrate(1, self._dummy, 0)

    def run(self, progress=None):
        """Integrate to the end of the horizon; returns the trace array.

        Shape ``(rows, c, len(TRACE_FIELDS))``; row ``r`` is at ``(r + 1) * decimation``.
        """
        c = self.cfg.c
        n_rows = self.n_total // self.decim
        rec = np.zeros((n_rows + 1, c, L.N_OUT))
        extra = np.zeros((n_rows + 1, c, 2))
        r = 0
        while self.k < self.n_total:
            self._prepare()
            n = self._next_boundary() - self.k
            rows = self._integrate(n, rec[r:], self.decim)
            extra[r:r + rows, :, 0] = self.vbar_est
            extra[r:r + rows, :, 1] = self.cigp[:, L.P_VAV]
            r += rows
            if progress is not None:
                progress(self.t)
        trace = np.empty((r, c, len(TRACE_FIELDS)))
        for j, f in enumerate(TRACE_FIELDS):
            if f in _FROM_OUT:
                trace[:, :, j] = rec[:r, :, _FROM_OUT[f]]
            else:
                trace[:, :, j] = extra[:r, :, 0 if f == "vbar_est" else 1]
        return trace


def trace_header(cfg):
    cols = ["t"]
    for cid in cfg.cig_ids:
        cols += [f"{f}_{cid}" for f in TRACE_FIELDS]
    return cols + ["case"]


def write_trace(path, cfg, trace):
    rows, c, nf = trace.shape
    flat = trace.reshape(rows, c * nf)
    fmt = "%.6f," + ",".join(["%.10g"] * (c * nf)) + "," + cfg.name + "\n"
    dec = cfg.decimation
    with open(path, "w", newline="") as fh:
        fh.write(",".join(trace_header(cfg)) + "\n")
        for r in range(rows):
            fh.write(fmt % ((r + 1) * dec, *flat[r]))


def with_overrides(cfg, dt=None, duration=None):
    """Copy of ``cfg`` with a new step and/or horizon; events past the horizon are dropped."""
    tm = dataclasses.replace(cfg.timing)
    if dt is not None:
        tm.dt = float(dt)
    events = cfg.events
    window = cfg.window
    if duration is not None:
        tm.duration = float(duration)
        kept = [e for e in events if e.time <= tm.duration]
        if len(kept) < len(events):
            log.warning("dropping %d event(s) beyond the %.3f s horizon", len(events) - len(kept), tm.duration)
        events = kept
        window = min(window, tm.duration)
    return dataclasses.replace(cfg, timing=tm, events=events, window=window)


def run_case(cfg, out_dir, backend=None, write_csv=True):
    """Run one scenario; writes ``<name>.csv`` and ``<name>.json`` into ``out_dir``.

    Returns ``(summary, trace)``.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from None
    sim = Simulation(cfg, backend=backend)
    t0 = _time.perf_counter()
    try:
        trace = sim.run()
    except NumericalAbort as exc:
        dump = out_dir / f"{cfg.name}.abort.json"
        dump.write_text(json.dumps({"t": exc.t, "variable": exc.variable, "value": repr(exc.value),
                                    "state": {k: repr(v) for k, v in exc.state.items()}}, indent=1))
        raise
    wall = _time.perf_counter() - t0
    summary = summarize(cfg, trace, net=sim.net)
    summary["wall_time_s"] = round(wall, 3)
    summary["backend"] = sim.backend
    if write_csv:
        write_trace(out_dir / f"{cfg.name}.csv", cfg, trace)
    path = out_dir / f"{cfg.name}.json"
    try:
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary {path}: {exc}") from None
    return summary, trace


__all__ = ["Simulation", "NumericalAbort", "run_case", "write_trace", "with_overrides", "build_arrays",
           "TRACE_FIELDS", "BACKEND"]
