"""Command-line entry point: ``mgsim run | compare | validate | reproduce``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from mgsim.engine import NumericalAbort, run_case, with_overrides
from mgsim.metrics import compare_cases
from mgsim.scenario import BUILTIN, ConfigError, load_scenario, validate

EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_ORDER = 0, 1, 2, 3

log = logging.getLogger("mgsim")


def _load(args):
    cfg = load_scenario(args.scenario)
    if getattr(args, "dt", None) is not None or getattr(args, "duration", None) is not None:
        cfg = validate(with_overrides(cfg, args.dt, args.duration))
    return cfg


def cmd_validate(args):
    cfg = load_scenario(args.scenario)
    tm = cfg.timing
    print(f"ok: {cfg.name} ({cfg.controller}), {cfg.c} CIGs, {len(cfg.lines)} lines, {len(cfg.loads)} loads, "
          f"dt={tm.dt:g} t1={tm.t1:g} t2={tm.t2:g} duration={tm.duration:g}, {len(cfg.events)} events")
    return EXIT_OK


def _print_summary(s):
    print(f"{s['case']}: freq_err_ss={s['freq_error_ss']:.2e} rad/s  mean_V={s['mean_voltage']:.3f} V  "
          f"V_err_max={s['voltage_error_max']:.3f} V  P_disp={s['P_dispersion']:.4f}  "
          f"Q_disp={s['Q_dispersion']:.4f}  ({s['wall_time_s']:.1f} s, {s['backend']})")


def cmd_run(args):
    cfg = _load(args)
    summary, _ = run_case(cfg, args.out, backend=args.backend, write_csv=not args.no_csv)
    _print_summary(summary)
    return EXIT_OK


def _report(report, out):
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}  ({c['lhs']:.4g} vs {c['rhs']:.4g})")
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "compare.json").write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if report["passed"] else EXIT_ORDER


def cmd_compare(args):
    summaries = []
    for p in args.summaries:
        try:
            summaries.append(json.loads(Path(p).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read summary {p}: {exc}") from None
    try:
        report = compare_cases(summaries)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return _report(report, args.out)


def cmd_reproduce(args):
    summaries = []
    for name in BUILTIN:
        cfg = load_scenario(name)
        if args.duration is not None:
            cfg = validate(with_overrides(cfg, None, args.duration))
        s, _ = run_case(cfg, args.out, backend=args.backend)
        _print_summary(s)
        summaries.append(s)
    return _report(compare_cases(summaries), args.out)


def build_parser():
    ap = argparse.ArgumentParser(prog="mgsim", description="Islanded inverter microgrid simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--scenario", required=True, help="TOML file or shipped name (case1..case4)")
    r.add_argument("--out", required=True)
    r.add_argument("--dt", type=float)
    r.add_argument("--duration", type=float)
    r.add_argument("--backend", choices=("cython", "python"))
    r.add_argument("--no-csv", action="store_true", help="write the summary only")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="check the cross-case orderings")
    c.add_argument("--out")
    c.add_argument("summaries", nargs="+", metavar="caseN.json")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="load and validate a scenario")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("reproduce", help="run the four shipped cases and compare them")
    a.add_argument("--out", required=True)
    a.add_argument("--duration", type=float)
    a.add_argument("--backend", choices=("cython", "python"))
    a.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
