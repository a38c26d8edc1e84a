"""Figure builders: snapshot line plots, space-time heatmaps with optional
trajectory overlays, and convergence tables.  Run directories are read-only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from . import readers  # noqa: E402

_LABELS = {"rho": r"$\rho$ (veh/m)", "v": "V (m/s)"}


def snapshot_lines(run_dir, t: float | None, out_path) -> Path:
    """Two-panel figure: density (left) and speed (right) at one time."""
    times = readers.snapshot_times(run_dir)
    if not times:
        raise readers.SchemaError(f"no snapshots in {run_dir}")
    if t is None:
        t = times[-1]
    snap = readers.read_snapshot(run_dir, t)
    x_km = snap["x"] / 1000.0
    fig, (ax_rho, ax_v) = plt.subplots(1, 2, figsize=(10, 3.6))
    ax_rho.plot(x_km, snap["rho"], lw=1.2)
    ax_rho.set_ylabel(_LABELS["rho"])
    ax_v.plot(x_km, snap["v"], lw=1.2, color="tab:red")
    ax_v.set_ylabel(_LABELS["v"])
    for ax in (ax_rho, ax_v):
        ax.set_xlabel("x (km)")
        ax.grid(alpha=0.3)
    fig.suptitle(f"t = {t:g} s")
    fig.tight_layout()
    return _save(fig, out_path)


def spacetime_heatmap(run_dir, var: str, out_path, trajectories: bool = False,
                      vmin: float | None = None,
                      vmax: float | None = None) -> Path:
    """Heatmap of rho or v over the t-x plane, optionally overlaid with the
    recorded observer trajectories."""
    if var not in _LABELS:
        raise readers.SchemaError(f"unknown variable {var!r}")
    st = readers.read_spacetime(run_dir)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    mesh = ax.pcolormesh(st["x"] / 1000.0, st["t"], st[var],
                         shading="nearest", cmap="turbo",
                         vmin=vmin, vmax=vmax, rasterized=True)
    fig.colorbar(mesh, ax=ax, label=_LABELS[var])
    if trajectories:
        for traj in readers.read_trajectories(run_dir):
            ax.plot(traj["x"] / 1000.0, traj["t"], color="white", lw=0.4,
                    alpha=0.7)
        ax.set_xlim(st["x"][0] / 1000.0, st["x"][-1] / 1000.0)
        ax.set_ylim(st["t"][0], st["t"][-1])
    ax.set_xlabel("x (km)")
    ax.set_ylabel("t (s)")
    fig.tight_layout()
    return _save(fig, out_path)


def convergence_table(run_dir, out_path) -> Path:
    """Render convergence.csv as a table figure."""
    rows = readers.read_convergence(run_dir)
    cells = [[f"{r['dx']:g}", f"{r['l1_rho']:.4e}",
              "-" if r["eoc"] is None else f"{r['eoc']:.2f}"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.0, 0.5 + 0.4 * len(cells)))
    ax.axis("off")
    table = ax.table(cellText=cells,
                     colLabels=["dx (m)", "L1(rho)", "EOC"],
                     loc="center")
    table.scale(1.0, 1.4)
    fig.tight_layout()
    return _save(fig, out_path)


def _save(fig, out_path) -> Path:
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
