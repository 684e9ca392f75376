"""Static vector-image plots for runs, barriers and trajectories.

Purely presentational; nothing downstream reads these files.  SVG output
is made reproducible by pinning the hash salt and dropping the date.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fblv"

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path) -> None:
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def plot_series(record, lam: float, path) -> None:
    """Front position against time with the threshold guide line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(record.t, record.s, lw=1.5, label="s(t)")
    ax.axhline(lam, color="crimson", ls="--", lw=1.0, label=r"$\Lambda$")
    ax.set_xlabel("t")
    ax.set_ylabel("front position")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, Path(path))


def plot_final_profiles(record, path) -> None:
    snap = record.snapshots[-1]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(snap.x, snap.U, lw=1.5, label="u")
    ax.plot(snap.x, snap.V, lw=1.5, ls="--", label="v")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(f"t = {snap.t:g}, s = {snap.s:.4g}")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, Path(path))


def plot_barriers(profiles, path, final_snapshot=None, window=None) -> None:
    """Barrier curves, optionally overlaid with a run's final profile."""
    x = profiles.grid.x
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, profiles.u_bar, color="tab:blue", lw=1.2, label="u upper")
    ax.plot(x, profiles.u_low, color="tab:blue", lw=1.2, ls=":", label="u lower")
    ax.plot(x, profiles.v_bar, color="tab:orange", lw=1.2, label="v upper")
    ax.plot(x, profiles.v_low, color="tab:orange", lw=1.2, ls=":", label="v lower")
    if final_snapshot is not None:
        ax.plot(final_snapshot.x, final_snapshot.U, color="tab:blue", lw=0.8, alpha=0.7)
        ax.plot(final_snapshot.x, final_snapshot.V, color="tab:orange", lw=0.8, alpha=0.7)
    if window is not None:
        ax.set_xlim(window[0], window[1] * 1.5)
    else:
        ax.set_xlim(0.0, min(profiles.grid.L, 15.0))
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, Path(path))


def plot_trajectory(traj, path, limit=None) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(traj.t, traj.u, lw=1.5, label="u")
    ax.plot(traj.t, traj.v, lw=1.5, ls="--", label="v")
    if limit is not None:
        ax.axhline(limit[0], color="tab:blue", ls=":", lw=0.8)
        ax.axhline(limit[1], color="tab:orange", ls=":", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("density")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, Path(path))


def emit_run_plots(record, lam: float, out_dir, fmt: str = "svg") -> list[Path]:
    out = Path(out_dir)
    files = [out / f"s_vs_t.{fmt}", out / f"final_profiles.{fmt}"]
    plot_series(record, lam, files[0])
    plot_final_profiles(record, files[1])
    return files
