"""Command-line front end: ``gcflow {flow,shrinker,verify,ineq}``.

Exit status: 0 on success, 1 on invalid input, 2 when a verification fails.
"""
import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bodies
from . import geometry as geo
from . import identities as ids
from .flow import FlowConfig, run
from .grid import build_grid
from .inequalities import SCAN_HEADER, scan, scan_checks
from .io import (ConfigError, dumps, emit_series, emit_snapshot, parse_config, write_csv,
                 write_text)
from .shrinker import (ClosureReport, TrajectoryError, shooting_sweep,
                       solve_shrinker_ode_n1)
from .support import SupportField, shrinker_residual

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

SPHERE_ALPHAS = {1: (1.2, 1.5, 1.9), 2: (0.6, 1.0, 1.4)}
ELLIPSE_RESOLUTIONS = (128, 256, 512)
# past 256 nodes the 1e-10 closure defect, amplified by the stencils, dominates
ODE_RESOLUTIONS = (64, 128, 256)
SWEEP_HEADER = ("h0", "closure_defect", "residual", "status")


def _common(p):
    p.add_argument("--config", help="key=value file ('#' comments)")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--seed")
    p.add_argument("--resolution", help="N for curves, NxM for surfaces")
    p.add_argument("--alpha")
    p.add_argument("--n")


def build_parser():
    parser = argparse.ArgumentParser(prog="gcflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("flow", help="evolve a convex body by a power of Gauss curvature")
    _common(p)
    for key in ("c-cfl", "normalization", "ratio-tol", "lambda-tol", "max-steps", "min-volume",
                "cadence", "snapshot-every", "init", "axes", "radius", "dt-max"):
        p.add_argument(f"--{key}")

    p = sub.add_parser("shrinker", help="shooting sweep for closed planar shrinkers")
    _common(p)
    for key in ("h0", "h0-min", "h0-max", "samples", "steps"):
        p.add_argument(f"--{key}")

    p = sub.add_parser("verify", help="run the identity and inequality checks")
    _common(p)
    p.add_argument("--case")
    p.add_argument("--count", help="number of fuzzed bodies (random case)")

    p = sub.add_parser("ineq", help="scan the scalar inequalities")
    _common(p)
    for key in ("n-max", "alpha-samples", "theta-samples", "theta-max"):
        p.add_argument(f"--{key}")
    return parser


def _overrides(args):
    skip = {"subcommand", "config", "out_dir"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _resolution(opts, n):
    res = opts.get("resolution", 256 if n == 1 else (48, 96))
    if n == 2 and not isinstance(res, tuple):
        res = (res, 2 * res)
    if n == 1 and isinstance(res, tuple):
        raise ConfigError("--resolution: curves take a single N")
    return res


def _summary(path, payload):
    write_text(path, dumps(payload, indent=1) + "\n")


# -- flow ----------------------------------------------------------------------

def cmd_flow(cfg):
    o = dict(cfg.options)
    n = o.pop("n", 1)
    o["resolution"] = _resolution(o, n)
    if n == 2:
        o.setdefault("init", "ellipsoid")
    try:
        fc = FlowConfig(n=n, seed=cfg.seed, **o)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    out = Path(cfg.out_dir)
    result = run(fc)
    emit_series(result.records, out / "series.csv")
    for st in result.snapshots:
        emit_snapshot(st.body, out / f"snapshot_{st.step:06d}.json", fc.alpha, st.t)
    emit_snapshot(result.state.body, out / "final.json", fc.alpha, result.state.t)
    last = result.records[-1]
    _summary(out / "summary.json", {
        "seed": cfg.seed, "n": n, "alpha": fc.alpha, "reason": result.reason,
        "steps": result.state.step, "t": result.state.t,
        "lambda_ratio": last.lambda_ratio, "Lambda_max": last.Lambda_max,
        "residual_max": last.residual_max, "in_range": fc.in_uniqueness_range})
    print(f"flow: {result.reason} after {result.state.step} steps, t={result.state.t:.6g}, "
          f"lambda ratio - 1 = {last.lambda_ratio - 1:.3e}")
    return EXIT_OK


# -- shrinker ------------------------------------------------------------------

def cmd_shrinker(cfg):
    o = cfg.options
    if o.get("n", 1) != 1:
        raise ConfigError("--n: the shooting method is for curves (n=1)")
    alpha = o.get("alpha", 1.5)
    steps = o.get("steps", 4096)
    lo, hi = o.get("h0_min", 1.01), o.get("h0_max", 3.0)
    if not lo < hi:
        raise ConfigError("h0_min must be below h0_max")
    out = Path(cfg.out_dir)
    grid_h0 = np.linspace(lo, hi, o.get("samples", 100))
    rows = shooting_sweep(alpha, grid_h0, steps)
    write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    counts = {s: sum(r[3] == s for r in rows)
              for s in ("closed-round", "closed-non-round", "open", "non-convex")}
    payload = {"seed": cfg.seed, "alpha": alpha, "steps": steps, "counts": counts,
               "min_defect": min((r[1] for r in rows if r[3] != "non-convex"), default=None)}
    if "h0" in o:
        try:
            sol = solve_shrinker_ode_n1(alpha, o["h0"], steps=steps)
        except TrajectoryError as exc:
            payload["solution"] = {"h0": o["h0"], "status": f"non-convex: {exc}"}
        else:
            if isinstance(sol, ClosureReport):
                payload["solution"] = {"h0": o["h0"], "status": "open",
                                       "closure_defect": sol.closure_defect}
            else:
                emit_snapshot(sol.body, out / "shrinker.json", alpha)
                payload["solution"] = {"h0": o["h0"], "status": "closed",
                                       "closure_defect": sol.closure_defect,
                                       "residual_max": sol.residual_max,
                                       "richardson_error": sol.richardson_error,
                                       "energy_drift": sol.energy_drift}
    _summary(out / "summary.json", payload)
    print(f"shrinker: alpha={alpha}, " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


# -- verify --------------------------------------------------------------------

def _sphere_case(o):
    reports, extra = [], []
    dims = (o["n"],) if "n" in o else (1, 2)
    for n in dims:
        body = bodies.sphere(build_grid(n, _resolution(o, n)))
        B = geo.bundle_from_support(body)
        alphas = (o["alpha"],) if "alpha" in o else SPHERE_ALPHAS[n]
        for a in alphas:
            res = shrinker_residual(body, a)[1]
            extra.append({"check": "shrinker residual", "n": n, "alpha": a, "value": res,
                          "threshold": 1e-12, "passed": res <= 1e-12})
            for ident in ids.ALL_IDS:
                reports.append(ids.roundoff_check(ident, B, a, f"sphere n={n} a={a:g}"))
    return reports, extra


def _ellipse_case(o):
    alpha = o.get("alpha", 1.0 / 3.0)

    def make(N):
        return geo.bundle_from_support(bodies.ellipse(build_grid(1, N), 2.0, 0.5))

    reports = [ids.refinement_study(i, make, ELLIPSE_RESOLUTIONS, alpha, "ellipse a=2")
               for i in ids.ALL_IDS]
    res = [shrinker_residual(bodies.ellipse(build_grid(1, N), 2.0, 0.5), alpha)[1]
           for N in ELLIPSE_RESOLUTIONS]
    order = ids.observed_order(res)
    extra = [{"check": "ellipse shrinker residual", "residuals": res, "order": order,
              "passed": bool(order >= 3.5 and res[-1] <= 1e-6)}]
    return reports, extra


def _random_case(o, seed):
    n = o.get("n", 2)
    grid = build_grid(n, _resolution(o, n))
    count = o.get("count", 100)
    rng = np.random.default_rng(seed)
    reports = ids.fuzz_campaign(grid, rng, count)
    s = ids.chart_fuzz_campaign(grid, rng, count)
    extra = [
        {"check": "euler gap", "min": s.min_euler_gap, "threshold": -1e-10,
         "passed": s.min_euler_gap >= -1e-10},
        {"check": "wbar - w", "max": {str(a): v for a, v in s.max_wbar_excess.items()},
         "threshold": 1e-10, "passed": max(s.max_wbar_excess.values()) <= 1e-10},
        {"check": "f - n w", "max": {str(a): v for a, v in s.max_f_excess.items()},
         "threshold": 1e-10, "passed": max(s.max_f_excess.values()) <= 1e-10},
    ]
    return reports, extra


def _ode_case(o):
    alpha = o.get("alpha", 1.0 / 3.0)
    sol = solve_shrinker_ode_n1(alpha, 2.0)
    if isinstance(sol, ClosureReport):
        return [], [{"check": "ode shrinker closes", "closure_defect": sol.closure_defect,
                     "passed": False}]
    fine = sol.body.h

    def make(N):
        return geo.bundle_from_support(SupportField(build_grid(1, N), fine[:: fine.size // N]))

    reports = [ids.refinement_study(i, make, ODE_RESOLUTIONS, alpha, "ode shrinker")
               for i in ids.ALL_IDS]
    check = {"check": "ode shrinker", "closure_defect": sol.closure_defect,
             "residual_max": sol.residual_max, "richardson_error": sol.richardson_error,
             "energy_drift": sol.energy_drift}
    ok = (sol.residual_max < 1e-8 and sol.richardson_error < 1e-8
          and sol.energy_drift < 1e-10)
    if alpha == 1.0 / 3.0:
        exact = bodies.ellipse(sol.body.grid, 2.0, 0.5).h
        check["ellipse_match"] = float(np.max(np.abs(fine - exact)))
        ok = ok and check["ellipse_match"] < 1e-8
    check["passed"] = bool(ok)
    return reports, [check]


def cmd_verify(cfg):
    o = cfg.options
    case = o.get("case", "sphere")
    if case == "sphere":
        reports, extra = _sphere_case(o)
    elif case == "ellipse":
        reports, extra = _ellipse_case(o)
    elif case == "random":
        reports, extra = _random_case(o, cfg.seed)
    else:
        reports, extra = _ode_case(o)
    out = Path(cfg.out_dir)
    passed = ids.suite_passed(reports) and all(e["passed"] for e in extra)
    rows = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in r.to_dict().items()} for r in reports]
    _summary(out / "report.json", {"case": case, "seed": cfg.seed, "passed": passed,
                                   "reports": rows, "checks": extra})
    table = ids.reports_table(reports)
    write_text(out / "report.txt", table + "\n")
    if case == "random":
        failed = [r for r in reports if not r.passed]
        print(f"{len(reports) - len(failed)}/{len(reports)} fuzz reports pass")
    else:
        print(table)
    for e in extra:
        print(f"{e['check']}: {'PASS' if e['passed'] else 'FAIL'}")
    print(f"verify {case}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAILED


# -- ineq ----------------------------------------------------------------------

def cmd_ineq(cfg):
    o = cfg.options
    rows, summary = scan(o.get("n_max", 10), o.get("alpha_samples", 1000),
                         o.get("theta_samples", 1000), o.get("theta_max", 10.0))
    out = Path(cfg.out_dir)
    write_csv(out / "scan.csv", SCAN_HEADER, rows)
    checks = scan_checks(summary)
    summary = {**summary, "seed": cfg.seed, "checks": checks}
    _summary(out / "summary.json", summary)
    for k, v in checks.items():
        bad = [p["n"] for p in summary["per_n"]
               if (k == "I1_positive" and not p["I1_positive"])
               or (k == "y_nonnegative" and p["y_min"] < -1e-12)]
        print(f"{k}: {'PASS' if v else 'FAIL'}" + (f" (fails at n={bad})" if bad else ""))
    print(f"min_J_margin={summary['min_J_margin']:.3e} "
          f"max_form_discrepancy={summary['max_form_discrepancy']:.3e}")
    return EXIT_OK if all(checks.values()) else EXIT_FAILED


COMMANDS = {"flow": cmd_flow, "shrinker": cmd_shrinker, "verify": cmd_verify, "ineq": cmd_ineq}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = parse_config(args.subcommand, args.config, overrides=_overrides(args),
                           out_dir=args.out_dir)
        return COMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
