"""Compiled vs pure-Python kernel: RK4 step throughput and full-case wall time.

    python3 benchmarks/bench_kernel.py [--steps N] [--full]
"""

import argparse
import time

import numpy as np

from mgsim.engine import Simulation
from mgsim.kernel import compiled_kernel
from mgsim.scenario import load_scenario


def steps_per_second(backend, cfg, n_steps):
    sim = Simulation(cfg, backend=backend)
    sim.step()  # round 0 and events
    y0 = sim.y.copy()
    rec = np.zeros((1, cfg.c, 7))
    t0 = time.perf_counter()
    sim.kernel.integrate(sim.y, 1, n_steps, cfg.timing.dt, 0, rec)
    el = time.perf_counter() - t0
    return n_steps / el, sim.y - y0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", default="case3")
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--full", action="store_true", help="also time a full 60 s run on the compiled kernel")
    args = ap.parse_args()
    cfg = load_scenario(args.scenario)

    rates = {}
    finals = {}
    backends = ["python"] + (["cython"] if compiled_kernel() is not None else [])
    for b in backends:
        n = args.steps if b == "python" else args.steps * 100
        rates[b], _ = steps_per_second(b, cfg, n)
        _, finals[b] = steps_per_second(b, cfg, args.steps)
        print(f"{b:7s} {rates[b]:12.0f} RK4 steps/s   (60 s case = {cfg.timing.n_steps / rates[b]:8.1f} s of integration)")
    if len(backends) == 2:
        print(f"speedup {rates['cython'] / rates['python']:.0f}x; "
              f"max state difference after {args.steps} steps: {np.max(np.abs(finals['cython'] - finals['python'])):.3e}")
    if args.full and "cython" in backends:
        t0 = time.perf_counter()
        Simulation(cfg, backend="cython").run()
        print(f"full {cfg.timing.duration:g} s {cfg.name} run, compiled kernel: {time.perf_counter() - t0:.2f} s wall")


if __name__ == "__main__":
    main()
