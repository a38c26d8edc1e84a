"""Command line for rendering figures from a solver run directory.

Usage:
  ptflow-viz plot <run-dir> --kind snapshot_lines --out fig.png [--t 900]
  ptflow-viz plot <run-dir> --kind spacetime_heatmap --var rho \
      [--trajectories] [--vmin a --vmax b] --out fig.png
  ptflow-viz plot <run-dir> --kind convergence_table --out fig.png
"""

from __future__ import annotations

import argparse
import sys

from . import plotting
from .readers import SchemaError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ptflow-viz")
    sub = ap.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure from a run dir")
    plot.add_argument("run_dir")
    plot.add_argument("--kind", required=True,
                      choices=("snapshot_lines", "spacetime_heatmap",
                               "convergence_table"))
    plot.add_argument("--var", choices=("rho", "v"),
                      help="variable for heatmaps")
    plot.add_argument("--t", type=float,
                      help="snapshot time (default: latest)")
    plot.add_argument("--trajectories", action="store_true")
    plot.add_argument("--vmin", type=float)
    plot.add_argument("--vmax", type=float)
    plot.add_argument("--out", required=True, help="output image path")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.kind == "spacetime_heatmap" and args.var is None:
        ap.error("--kind spacetime_heatmap needs --var")
    try:
        if args.kind == "snapshot_lines":
            out = plotting.snapshot_lines(args.run_dir, args.t, args.out)
        elif args.kind == "spacetime_heatmap":
            out = plotting.spacetime_heatmap(
                args.run_dir, args.var, args.out,
                trajectories=args.trajectories, vmin=args.vmin,
                vmax=args.vmax)
        else:
            out = plotting.convergence_table(args.run_dir, args.out)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
