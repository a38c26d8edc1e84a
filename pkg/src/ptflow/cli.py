"""Command-line driver.

Subcommands:
  run          integrate a scenario and write its outputs as CSV + meta.json
  convergence  grid self-convergence table against a fine reference
  catalog      list the built-in scenario names
  diag         plateau and front-speed diagnostics on an existing run dir

Exit codes: 0 success, 2 usage, 3 scenario validation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .diagnostics import convergence_table, front_speed, plateau_report
from .grid import Grid
from .model import ModelError
from .output import load_snapshot, load_spacetime, snapshot_times, write_run_dir
from .scenarios import (
    OutputPlan,
    Scenario,
    ScenarioError,
    TrajectorySeeding,
    builtin_scenarios,
    parse_scenario,
    serialize_scenario,
    validate_scenario,
)
from .stepper import NumericsError, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCENARIO = 3
EXIT_NUMERICS = 4


def _load_scenario(name_or_path: str) -> Scenario:
    catalog = builtin_scenarios()
    if name_or_path in catalog:
        return catalog[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise ScenarioError(
            f"{name_or_path!r} is neither a catalog name nor a scenario file "
            f"(catalog: {', '.join(sorted(catalog))})")
    return parse_scenario(path.read_text())


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if args.dx is not None:
        span = sc.grid.x_right - sc.grid.x_left
        n = span / args.dx
        if abs(n - round(n)) > 1e-9:
            raise ScenarioError(f"--dx {args.dx} does not tile the domain")
        sc = replace(sc, grid=Grid(sc.grid.x_left, sc.grid.x_right, round(n)))
    if args.cfl is not None:
        sc = replace(sc, cfl=args.cfl)
    if args.t_final is not None:
        out = sc.output
        snaps = tuple(t for t in out.snapshots if t <= args.t_final)
        if args.t_final not in snaps:
            snaps += (args.t_final,)
        sc = replace(sc, t_final=args.t_final,
                     output=replace(out, snapshots=snaps))
    plan = sc.output
    if args.snapshots is not None:
        plan = replace(plan, snapshots=tuple(args.snapshots))
    if args.spacetime_stride is not None:
        plan = replace(plan, spacetime_stride=args.spacetime_stride)
    if args.trajectories and plan.trajectories is None:
        plan = replace(plan, trajectories=TrajectorySeeding(100.0, 50.0))
    return validate_scenario(replace(sc, output=plan))


def _cmd_run(args) -> int:
    sc = _apply_overrides(_load_scenario(args.scenario), args)
    doc = serialize_scenario(sc)
    out = run(sc, workers=args.workers)
    out.meta["scenario"] = json.loads(doc)
    out.meta["scenario_sha256"] = hashlib.sha256(doc.encode()).hexdigest()
    out.meta["package_version"] = __version__
    write_run_dir(args.out, out)
    n_snap = len(out.snapshots)
    print(f"wrote {args.out}: {out.meta['n_steps']} steps, {n_snap} snapshot(s)")
    return EXIT_OK


def _cmd_convergence(args) -> int:
    sc = _load_scenario(args.scenario)
    rows = convergence_table(sc, args.dx_list, args.ref_dx,
                             workers=args.workers)
    lines = ["dx,l1_rho,eoc"]
    for row in rows:
        eoc = "" if row.eoc is None else repr(row.eoc)
        lines.append(f"{row.dx!r},{row.l1_rho!r},{eoc}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "convergence.csv").write_text(text)
    print(text, end="")
    return EXIT_OK


def _cmd_catalog(_args) -> int:
    for name, sc in sorted(builtin_scenarios().items()):
        print(f"{name}: {sc.grid.n_cells} cells on "
              f"[{sc.grid.x_left:g}, {sc.grid.x_right:g}], "
              f"t_final={sc.t_final:g}")
    return EXIT_OK


def _cmd_diag(args) -> int:
    if args.what == "plateaus":
        times = snapshot_times(args.run_dir)
        if not times:
            raise ScenarioError(f"no snapshots in {args.run_dir}")
        t = args.t if args.t is not None else times[-1]
        snap = load_snapshot(args.run_dir, t)
        for pl in plateau_report(snap.x, snap.rho, args.tol):
            print(f"rho={pl.value:.6g} over [{pl.x_start:g}, {pl.x_end:g}] "
                  f"({pl.n_cells} cells)")
    else:
        st = load_spacetime(args.run_dir)
        x_window = tuple(args.x_window) if args.x_window else None
        speed = front_speed(st, args.threshold, tuple(args.t_window), x_window)
        print(f"front speed: {speed!r} m/s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ptflow",
        description="Finite-volume central-upwind solver for a two-phase "
                    "traffic flow model")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="integrate a scenario")
    runp.add_argument("scenario", help="catalog name or scenario file path")
    runp.add_argument("--dx", type=float, help="override cell size (m)")
    runp.add_argument("--cfl", type=float)
    runp.add_argument("--t-final", dest="t_final", type=float)
    runp.add_argument("--out", default="run_out", help="output directory")
    runp.add_argument("--snapshots", type=_float_list,
                      help="comma-separated snapshot times")
    runp.add_argument("--spacetime-stride", dest="spacetime_stride", type=int,
                      help="record every n-th step (0 disables)")
    runp.add_argument("--trajectories", action="store_true",
                      help="integrate observer trajectories (100 m / 50 s "
                           "seeding unless the scenario says otherwise)")
    runp.add_argument("--workers", type=int, default=1)
    runp.set_defaults(func=_cmd_run)

    conv = sub.add_parser("convergence", help="grid self-convergence study")
    conv.add_argument("scenario")
    conv.add_argument("--dx-list", dest="dx_list", type=_float_list,
                      required=True)
    conv.add_argument("--ref-dx", dest="ref_dx", type=float, required=True)
    conv.add_argument("--out", help="directory for convergence.csv")
    conv.add_argument("--workers", type=int, default=1)
    conv.set_defaults(func=_cmd_convergence)

    cat = sub.add_parser("catalog", help="list built-in scenarios")
    cat.set_defaults(func=_cmd_catalog)

    diag = sub.add_parser("diag", help="diagnostics on a run directory")
    diag.add_argument("what", choices=("plateaus", "front"))
    diag.add_argument("run_dir")
    diag.add_argument("--t", type=float, help="snapshot time (plateaus)")
    diag.add_argument("--tol", type=float, default=0.002,
                      help="plateau density tolerance (veh/m)")
    diag.add_argument("--threshold", type=float,
                      help="front density threshold (veh/m)")
    diag.add_argument("--t-window", dest="t_window", type=_float_list,
                      help="front fit window t0,t1 (s)")
    diag.add_argument("--x-window", dest="x_window", type=_float_list,
                      help="restrict the front search to x0,x1 (m)")
    diag.set_defaults(func=_cmd_diag)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "diag" and args.what == "front":
        if args.threshold is None or args.t_window is None:
            ap.error("diag front needs --threshold and --t-window")
    try:
        return args.func(args)
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    except NumericsError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICS
    except ModelError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
