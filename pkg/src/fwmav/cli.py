"""Command line entry point: ``fwmav simulate | check | compare-oracle``.

Exit codes
----------
simulate        0 ok, 2 state became non-finite, 3 configuration error
check           0 every property within tolerance, 1 otherwise, 3 config error
compare-oracle  0 max relative error within tolerance, 1 otherwise, 3 config error
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path

from . import checks, config, oracle, report
from .dynamics import ZeroForces
from .errors import ConfigError, NonFinite
from .integrator import sample_trajectory, simulate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_NONFINITE = 2
EXIT_CONFIG = 3

ORACLE_TOL = 1e-4
ORACLE_HORIZON = 0.5


def _load(args, default):
    if args.config is None:
        cfg = config.load_builtin(default)
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = config.load(args.config)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    return cfg.with_overrides(
        dt=getattr(args, "dt", None),
        duration=getattr(args, "duration", None),
        out=getattr(args, "out", None),
        figures=False if getattr(args, "no_figures", False) else None,
    )


def _figures(cfg, fn, *a, **kw):
    if not cfg.output["figures"]:
        return None
    from . import plotting

    return getattr(plotting, fn)(*a, **kw)


def cmd_simulate(args):
    cfg = _load(args, "hover")
    if not cfg.duration > 0.0:
        raise ConfigError("must be positive for simulate", "duration")
    p = cfg.inertial_params()
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        traj = simulate(
            p,
            cfg.initial_state(),
            cfg.force_provider(),
            cfg.gait_spec(),
            cfg.integrator_config(),
            cfg.duration,
            compiled=not args.python_path,
        )
    except NonFinite as exc:
        print(f"error: {exc}", file=sys.stderr)
        traj = exc.trajectory
        code = EXIT_NONFINITE
    wall = time.perf_counter() - t0
    csv_path = report.write_trajectory_csv(cfg.csv_path(), traj)
    summary = report.summary(traj, wall)
    report.write_json(cfg.summary_path(), summary)
    _figures(cfg, "plot_trajectory", traj, cfg.output_dir() / "trajectory.png")
    print(f"wrote {csv_path} ({len(traj)} samples)")
    for k, v in summary.items():
        print(f"  {k:<22} {v:.6g}" if isinstance(v, float) else f"  {k:<22} {v}")
    return code


def _parse_tol(items):
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or name not in checks.TOLERANCES:
            raise ConfigError(f"expected NAME=VALUE with NAME in {sorted(checks.TOLERANCES)}", f"--tol {item}")
        try:
            out[name] = float(value)
        except ValueError:
            raise ConfigError(f"not a number: {value!r}", f"--tol {item}") from None
    return out


def cmd_check(args):
    cfg = _load(args, "conservative")
    names = []
    for item in args.only or []:
        names.extend(n for n in item.split(",") if n)
    for n in names:
        if n not in checks.SUITES:
            raise ConfigError(f"unknown suite; choose from {', '.join(checks.SUITES)}", f"--only {n}")
    rows = checks.run_suites(cfg, names or None, seed=args.seed, tolerances=_parse_tol(args.tol))
    print(checks.format_table(rows))
    if args.out is not None:
        report.write_json(
            Path(args.out) / "check.json",
            [
                {"name": m.name, "value": float(m.value), "tolerance": float(m.tolerance), "passed": m.passed, "detail": m.detail}
                for m in rows
            ],
        )
    failed = [m.name for m in rows if not m.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} properties within tolerance")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_compare_oracle(args):
    cfg = _load(args, "hover")
    horizon = ORACLE_HORIZON if args.horizon is None else args.horizon
    if horizon < 0:
        raise ConfigError("must be non-negative", "--horizon")
    p = cfg.inertial_params()
    st = cfg.initial_state()
    provider = cfg.force_provider()
    gait = cfg.gait_spec()
    icfg = cfg.integrator_config()
    if horizon == 0:
        red = sample_trajectory(p, st, provider, gait)
    else:
        red = simulate(p, st, provider, gait, icfg, horizon, compiled=not args.python_path)
    orc = oracle.oracle_simulate(
        p,
        st,
        gait=gait,
        provider=None if isinstance(provider, ZeroForces) else provider,
        dt=icfg.dt,
        duration=horizon,
        record_every=icfg.record_every,
    )
    cmp = oracle.compare(red, orc)
    tol = ORACLE_TOL if args.tol is None else args.tol
    out = cfg.output_dir()
    report.write_error_csv(out / "oracle_errors.csv", cmp)
    comp, t = cmp.worst()
    report.write_json(
        out / "oracle_summary.json",
        {
            "max_rel_error": cmp.max_rel,
            "tolerance": tol,
            "worst_component": comp,
            "worst_time": t,
            "horizon": horizon,
            "samples": len(cmp.t),
            "recenterings": orc.recenterings,
        },
    )
    _figures(cfg, "plot_oracle_errors", cmp, out / "oracle_errors.png", tolerance=tol)
    ok = cmp.max_rel <= tol
    print(f"max relative error {cmp.max_rel:.3e} (tolerance {tol:.1e}); worst component {comp} at t = {t:.6g} s")
    print("MATCH" if ok else "MISMATCH")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    ap = argparse.ArgumentParser(prog="fwmav", description="Reduced dynamics of a two-winged flapping vehicle.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, default):
        sp.add_argument("--config", metavar="PATH", help=f"YAML run config (default: built-in '{default}')")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")

    sp = sub.add_parser("simulate", help="integrate a configured run and write CSV, summary and figures")
    common(sp, "hover")
    sp.add_argument("--dt", type=float, help="time step override (s)")
    sp.add_argument("--duration", type=float, help="duration override (s)")
    sp.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    sp.add_argument("--python-path", action="store_true", help="use the pure-Python stepper (slow; for cross-checks)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check", help="run the property suites and print a pass/fail table")
    common(sp, "conservative")
    sp.add_argument("--seed", type=int, default=0, help="seed for the random-state suites")
    sp.add_argument("--only", action="append", metavar="NAME", help=f"run only these suites ({', '.join(checks.SUITES)})")
    sp.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a tolerance")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("compare-oracle", help="compare a reduced run with the full-coordinate oracle")
    common(sp, "hover")
    sp.add_argument("--horizon", "--duration", dest="horizon", type=float, help=f"comparison horizon (s, default {ORACLE_HORIZON:g})")
    sp.add_argument("--dt", type=float, help="time step override (s)")
    sp.add_argument("--tol", type=float, help=f"relative error tolerance (default {ORACLE_TOL:g})")
    sp.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    sp.add_argument("--python-path", action="store_true", help="use the pure-Python reduced stepper")
    sp.set_defaults(func=cmd_compare_oracle)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
