"""Scenario files: TOML with nested tables for CIGs, lines, loads, comm, events.

See ``docs/scenario_format.md`` for the schema. Everything is validated at
load time so that a run never starts from an inconsistent configuration.
"""

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np
from scipy.sparse.csgraph import connected_components

from mgsim.baseline_pfqv import PfqvParams
from mgsim.comm import CommGraph, GraphError
from mgsim.inner_control import InnerGains
from mgsim.plant import CigParams, LineParams, LoadParams, Network
from mgsim.voltage_reg import IndModeGains, consensus_spectral_radius, default_consensus_gain

CONTROLLERS = ("case1", "case2", "case3", "pfqv", "custom")
EVENT_KINDS = ("load_step", "ramp_setpoint", "enable_controller", "trigger_ind_voltage")
CONTROLLER_NAMES = ("consensus", "avg_volt_pi", "secondary_freq", "secondary_volt", "secondary")
RAMP_FIELDS = ("P_nom", "Q_nom")
BUILTIN = ("case1", "case2", "case3", "case4")


class ConfigError(ValueError):
    pass


@dataclass
class Timing:
    dt: float = 5e-5
    t1: float = 0.025
    t2: float = 0.05
    duration: float = 60.0

    @property
    def steps_per_t1(self):
        return int(round(self.t1 / self.dt))

    @property
    def rounds_per_t2(self):
        return int(round(self.t2 / self.t1))

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))


@dataclass
class Event:
    time: float
    kind: str
    data: dict = field(default_factory=dict)


@dataclass
class BandTriggerConfig:
    threshold: float
    dwell: float
    mode: int


@dataclass
class ScenarioConfig:
    name: str
    controller: str
    cigs: list
    lines: list
    loads: list
    comm: CommGraph
    cig_ids: list
    load_ids: list
    omega_s: float = 2 * math.pi * 50
    V_s: float = 400.0
    closure: str = "kcl"
    r_shunt: float = 1000.0
    timing: Timing = field(default_factory=Timing)
    decimation: float = 1e-3
    window: float = 2.0
    inner: InnerGains = field(default_factory=InnerGains)
    m: list = None
    n_share: list = None
    Q_nom: float = 0.0
    P_nom: float = 0.0
    c_f: float = 10.0
    pinned: int = 0
    b: float = 1.0
    rho: float = 0.5
    k_I: float = None
    avg_Kp: float = 100.0
    avg_Ki: float = 1000.0
    ind_modes: dict = field(default_factory=dict)
    band_trigger: BandTriggerConfig = None
    pfqv: PfqvParams = field(default_factory=PfqvParams)
    comm_drop: float = 0.0
    comm_delay: int = 0
    seed: int = 0
    events: list = field(default_factory=list)
    source: str = None

    @property
    def kind(self):
        return "pfqv" if self.controller == "pfqv" else "proposed"

    @property
    def c(self):
        return len(self.cigs)

    def network(self):
        return Network(self.cigs, self.lines, [LoadParams(p.R, p.L, p.bus) for p in self.loads])

    @property
    def decim_steps(self):
        return int(round(self.decimation / self.timing.dt))

    def fingerprint(self):
        """Hash of the electrical topology and disturbance schedule.

        Runs are comparable only when these agree; controller settings are
        deliberately excluded.
        """
        topo = {
            "cigs": [[p.R_f, p.L_f, p.C_f, p.R_c, p.L_c, p.bus] for p in self.cigs],
            "lines": [[p.R, p.L, p.from_bus, p.to_bus] for p in self.lines],
            "loads": [[p.R, p.L, p.bus] for p in self.loads],
            "load_steps": [[e.time, e.data.get("load"), e.data.get("R"), e.data.get("L")]
                           for e in self.events if e.kind == "load_step"],
            "V_s": self.V_s, "omega_s": self.omega_s, "duration": self.timing.duration,
        }
        return hashlib.sha256(json.dumps(topo, sort_keys=True).encode()).hexdigest()[:16]


def _is_multiple(a, b):
    q = a / b
    return q >= 1 - 1e-9 and abs(q - round(q)) < 1e-6


def _req(table, key, where):
    try:
        return table[key]
    except KeyError:
        raise ConfigError(f"{where}: missing required key '{key}'") from None


def builtin_path(name):
    return resources.files("mgsim") / "scenarios" / f"{name}.toml"


def resolve_path(name):
    """A filesystem path, or the name of a shipped scenario (``case1`` .. ``case4``)."""
    p = Path(name)
    if p.exists():
        return p
    if name in BUILTIN:
        return Path(str(builtin_path(name)))
    raise ConfigError(f"scenario file not found: {name}")


def load_scenario(path):
    path = resolve_path(str(path))
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc}") from None
    cfg = parse_scenario(raw, source=str(path))
    validate(cfg)
    return cfg


def loads_scenario(text):
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    cfg = parse_scenario(raw)
    validate(cfg)
    return cfg


def _cig_index(cfg_ids, value, where):
    if value not in cfg_ids:
        raise ConfigError(f"{where}: unknown CIG id {value!r}")
    return cfg_ids.index(value)


def _cig_list(ids, value, where):
    if value == "all":
        return list(range(len(ids)))
    if isinstance(value, int):
        value = [value]
    return [_cig_index(ids, v, where) for v in value]


def parse_scenario(raw, source=None):
    try:
        return _parse(raw, source)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source or 'scenario'}: {exc}") from None


def _parse(raw, source):
    name = raw.get("name", "scenario")
    controller = raw.get("controller", "custom")
    if controller not in CONTROLLERS:
        raise ConfigError(f"controller must be one of {CONTROLLERS}, got {controller!r}")
    system = raw.get("system", {})
    timing = Timing(**raw.get("timing", {}))
    output = raw.get("output", {})
    filt = raw.get("filter", {})

    cig_tables = raw.get("cig", [])
    if not cig_tables:
        raise ConfigError("scenario defines no [[cig]] tables")
    cig_ids, cigs, m_list, n_list = [], [], [], []
    droop = raw.get("droop", {})
    avg = raw.get("avg_pi", {})
    for k, t in enumerate(cig_tables):
        where = f"cig[{k}]"
        cid = _req(t, "id", where)
        if cid in cig_ids:
            raise ConfigError(f"{where}: duplicate CIG id {cid}")
        cig_ids.append(cid)
        cigs.append(CigParams(
            R_f=t.get("R_f", filt.get("R_f")), L_f=t.get("L_f", filt.get("L_f")),
            C_f=t.get("C_f", filt.get("C_f")), R_c=_req(t, "R_c", where), L_c=_req(t, "L_c", where),
            bus=_req(t, "bus", where)))
        m_list.append(float(t.get("m", droop.get("m", 2e-5))))
        n_list.append(float(t.get("n", avg.get("n", 1.0))))

    lines = [LineParams(_req(t, "R", f"line[{k}]"), _req(t, "L", f"line[{k}]"),
                        _req(t, "from", f"line[{k}]"), _req(t, "to", f"line[{k}]"))
             for k, t in enumerate(raw.get("line", []))]
    load_ids, loads = [], []
    for k, t in enumerate(raw.get("load", [])):
        lid = t.get("id", k + 1)
        if lid in load_ids:
            raise ConfigError(f"load[{k}]: duplicate load id {lid}")
        load_ids.append(lid)
        loads.append(LoadParams(_req(t, "R", f"load[{k}]"), _req(t, "L", f"load[{k}]"), _req(t, "bus", f"load[{k}]")))

    comm_t = raw.get("comm", {})
    edges = _req(comm_t, "edges", "comm")
    try:
        comm = CommGraph.from_edges(len(cigs), [(_cig_index(cig_ids, i, "comm.edges"),
                                                 _cig_index(cig_ids, j, "comm.edges")) for i, j in edges])
    except GraphError as exc:
        raise ConfigError(f"comm: {exc}") from None

    sec = raw.get("secondary", {})
    cons = raw.get("consensus", {})
    modes = {}
    for key, t in raw.get("ind_voltage", {}).items():
        if key.startswith("mode"):
            modes[int(key[4:])] = IndModeGains(**t)
    band = raw.get("ind_voltage", {}).get("band")
    band_cfg = BandTriggerConfig(**band) if band else None
    pf = dict(raw.get("pfqv", {}))
    pinned = _cig_index(cig_ids, sec.get("pinned", cig_ids[0]), "secondary.pinned")
    pfqv = PfqvParams(**pf)
    comm_opts = raw.get("comm", {})

    events = []
    for k, t in enumerate(raw.get("event", [])):
        t = dict(t)
        where = f"event[{k}]"
        kind = _req(t, "kind", where)
        time_ = float(_req(t, "time", where))
        if kind not in EVENT_KINDS:
            raise ConfigError(f"{where}: unknown event kind {kind!r}; expected one of {EVENT_KINDS}")
        t.pop("kind"), t.pop("time")
        if kind == "load_step":
            lid = _req(t, "load", where)
            if lid not in load_ids:
                raise ConfigError(f"{where}: unknown load id {lid!r}")
            _req(t, "R", where), _req(t, "L", where)
        elif kind == "ramp_setpoint":
            if t.get("field") not in RAMP_FIELDS:
                raise ConfigError(f"{where}: ramp field must be one of {RAMP_FIELDS}")
            t["cigs"] = _cig_list(cig_ids, t.pop("cig", "all"), where)
            _req(t, "from", where), _req(t, "to", where)
            t.setdefault("t_end", time_)
            if t["t_end"] < time_:
                raise ConfigError(f"{where}: ramp ends before it starts")
        elif kind == "enable_controller":
            if t.get("name") not in CONTROLLER_NAMES:
                raise ConfigError(f"{where}: controller name must be one of {CONTROLLER_NAMES}")
        elif kind == "trigger_ind_voltage":
            t["cigs"] = _cig_list(cig_ids, t.pop("cigs", "all"), where)
            if _req(t, "mode", where) not in modes:
                raise ConfigError(f"{where}: no [ind_voltage.mode{t['mode']}] gains defined")
        events.append(Event(time_, kind, t))

    return ScenarioConfig(
        name=name, controller=controller, cigs=cigs, lines=lines, loads=loads, comm=comm,
        cig_ids=cig_ids, load_ids=load_ids,
        omega_s=float(system.get("omega_s", 2 * math.pi * 50)), V_s=float(system.get("V_s", 400.0)),
        closure=system.get("closure", "kcl"), r_shunt=float(system.get("r_shunt", 1000.0)),
        timing=timing, decimation=float(output.get("decimation", 1e-3)), window=float(output.get("window", 2.0)),
        inner=InnerGains(**raw.get("inner", {})), m=m_list, n_share=n_list,
        Q_nom=float(droop.get("Q_nom", 0.0)), P_nom=float(droop.get("P_nom", 0.0)),
        c_f=float(sec.get("c_f", 10.0)), pinned=pinned, b=float(sec.get("b", 1.0)),
        rho=float(cons.get("rho", 0.5)), k_I=cons.get("k_I"),
        avg_Kp=float(avg.get("Kp", 100.0)), avg_Ki=float(avg.get("Ki", 1000.0)),
        ind_modes=modes, band_trigger=band_cfg, pfqv=pfqv,
        comm_drop=float(comm_opts.get("drop_prob", 0.0)), comm_delay=int(comm_opts.get("delay_rounds", 0)),
        seed=int(raw.get("seed", 0)), events=events, source=source,
    )


def validate(cfg):
    tm = cfg.timing
    if not (tm.dt > 0 and tm.duration > 0):
        raise ConfigError("timing: dt and duration must be positive")
    if not _is_multiple(tm.t1, tm.dt):
        raise ConfigError(f"timing: t1={tm.t1} is not a positive integer multiple of dt={tm.dt}")
    if not _is_multiple(tm.t2, tm.t1):
        raise ConfigError(f"timing: t2={tm.t2} is not a positive integer multiple of t1={tm.t1}")
    if not tm.t2 > tm.t1:
        raise ConfigError("timing: t2 must exceed t1")
    if not _is_multiple(cfg.decimation, tm.dt):
        raise ConfigError(f"output: decimation={cfg.decimation} is not a multiple of dt")
    if not _is_multiple(tm.duration, cfg.decimation):
        raise ConfigError("output: duration is not a multiple of the decimation interval")
    if cfg.closure not in ("kcl", "shunt"):
        raise ConfigError(f"system: closure must be 'kcl' or 'shunt', got {cfg.closure!r}")
    if not cfg.r_shunt > 0:
        raise ConfigError("system: r_shunt must be positive")
    if not cfg.V_s > 0:
        raise ConfigError("system: V_s must be positive")
    if any(not m > 0 for m in cfg.m):
        raise ConfigError("droop: m must be positive for every CIG")
    if not cfg.b > 0:
        raise ConfigError("secondary: pinning gain b must be positive on the pinned CIG")
    if not 0 < cfg.window <= tm.duration:
        raise ConfigError("output: window must lie within the run")
    try:
        cfg.network()
    except ValueError as exc:
        raise ConfigError(f"topology: {exc}") from None
    bus_ids = set(cfg.network().bus_ids)
    for p in cfg.lines:
        for bus in (p.from_bus, p.to_bus):
            if bus not in bus_ids:
                raise ConfigError(f"line references unknown bus {bus}")
    _check_electrical_connectivity(cfg)
    k_I = cfg.k_I if cfg.k_I is not None else default_consensus_gain(cfg.comm.adjacency)
    radius = consensus_spectral_radius(cfg.comm.adjacency, cfg.rho, k_I)
    if radius >= 1.0:
        raise ConfigError(f"consensus: rho={cfg.rho}, k_I={k_I} diverge on this graph (root modulus {radius:.4f})")
    last = -math.inf
    for e in cfg.events:
        if not 0 <= e.time <= tm.duration:
            raise ConfigError(f"event {e.kind} at t={e.time} lies outside [0, {tm.duration}]")
        if e.time < last:
            raise ConfigError(f"events are not sorted by time (t={e.time} after t={last})")
        last = e.time
    return cfg


def _check_electrical_connectivity(cfg):
    net = cfg.network()
    n = net.c + net.n_buses
    A = np.zeros((n, n))
    for a, b in zip(net.br_a, net.br_b):
        if b >= 0:
            A[a, b] = A[b, a] = 1.0
    n_comp, _ = connected_components(A, directed=False)
    if n_comp > 1:
        raise ConfigError("topology: electrical network is not connected")
