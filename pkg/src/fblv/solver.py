"""Front-fixing finite-difference time stepper with the Stefan free boundary.

The moving domain [0, s(t)] is mapped onto the fixed interval [0, 1] by
xi = x / s(t), so the front position becomes a single ODE unknown and the
profiles live on a static uniform grid.  See ``_stepper`` for the scheme.

A run is captured in a :class:`RunRecord`: a per-step series of
(t, s, s', sup u, sup v) plus periodic profile snapshots, serializable to
a directory of CSV files with a JSON sidecar.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _stepper
from .core import EPS_SCHEME, InitialData, ModelParams, ProblemKind, a_priori_bound
from .errors import (
    BlowUpError,
    BoundCeilingError,
    ConfigError,
    FrontRetreatError,
    PositivityError,
    SolverError,
    StabilityError,
)

_STATUS_ERRORS = {
    _stepper.BLOWUP: (BlowUpError, "non-finite value in a profile"),
    _stepper.UNDERSHOOT: (PositivityError,
                          f"profile undershot below -{_stepper.UNDERSHOOT_TOL:g}"),
    _stepper.RETREAT: (FrontRetreatError, "Stefan rule produced a negative front speed"),
    _stepper.CFL: (StabilityError,
                   "dt violates the front-advection constraint dt <= 0.5 dxi s / s'"),
    _stepper.PROFILE_CEIL: (BoundCeilingError,
                            "profile exceeded the a-priori ceiling M (1 + eps)"),
    _stepper.SPEED_CEIL: (BoundCeilingError,
                          "front speed exceeded the monitored ceiling"),
}


@dataclass(frozen=True)
class GridSpec:
    """Discretization: cells on xi in [0,1], time step, horizon, snapshot cadence.

    ``snapshot_stride=None`` picks a stride giving roughly a dozen
    snapshots over the run.
    """

    n_cells: int = 400
    dt: float = 2.5e-4
    t_max: float = 100.0
    snapshot_stride: int | None = None

    def __post_init__(self):
        if self.n_cells < 16:
            raise ConfigError(f"n_cells must be >= 16, got {self.n_cells}")
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_max < 0.0:
            raise ConfigError(f"t_max must be nonnegative, got {self.t_max}")
        if self.snapshot_stride is not None and self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def effective_stride(self) -> int:
        if self.snapshot_stride is not None:
            return self.snapshot_stride
        return max(1, math.ceil(self.n_steps / 12))


@dataclass
class SimState:
    """Front position/speed and both profiles on the uniform xi grid."""

    t: float
    s: float
    s_prime: float
    U: np.ndarray
    V: np.ndarray

    def validate(self, kind: ProblemKind) -> None:
        if len(self.U) != len(self.V) or len(self.U) < 4:
            raise ConfigError("state profiles must share a grid of at least 4 nodes")
        if not (self.s > 0.0 and math.isfinite(self.s)):
            raise ConfigError(f"front position must be positive, got {self.s}")
        if self.s_prime < 0.0:
            raise ConfigError("front speed must be nonnegative")
        if np.any(self.U < 0.0) or np.any(self.V < 0.0):
            raise ConfigError("profiles must be nonnegative")
        if self.U[-1] != 0.0 or self.V[-1] != 0.0:
            raise ConfigError("profiles must vanish at xi = 1")
        if kind is ProblemKind.DFB and (self.U[0] != 0.0 or self.V[0] != 0.0):
            raise ConfigError("DFB profiles must vanish at xi = 0")


@dataclass
class Snapshot:
    t: float
    s: float
    U: np.ndarray
    V: np.ndarray

    @property
    def x(self) -> np.ndarray:
        """Physical coordinates of the profile nodes."""
        n = len(self.U) - 1
        return self.s * np.arange(n + 1) / n


@dataclass
class RunRecord:
    """Everything one simulation produced, plus the inputs that produced it."""

    params: ModelParams
    kind: ProblemKind
    grid: GridSpec
    init: InitialData | None
    t: np.ndarray
    s: np.ndarray
    s_prime: np.ndarray
    sup_u: np.ndarray
    sup_v: np.ndarray
    snapshots: list[Snapshot]
    snapshot_stride: int
    m_ceiling: float
    speed_ceiling: float
    failure: str | None = None
    stop_reason: str | None = None

    @property
    def final_s(self) -> float:
        return float(self.s[-1])

    @property
    def final_t(self) -> float:
        return float(self.t[-1])

    def check_invariants(self) -> None:
        """Series times strictly increase and the front never retreats."""
        if np.any(np.diff(self.t) <= 0.0):
            raise SolverError("series times are not strictly increasing")
        if np.any(np.diff(self.s) < 0.0):
            raise SolverError("front position decreased along the series")


def boundary_flux(state: SimState) -> tuple[float, float]:
    """One-sided second-order gradients of u and v at the front, in x.

    Uses the pinned zero at xi = 1: u_x(s) ~ (U[n-2] - 4 U[n-1]) / (2 dxi s).
    Nonpositive for nonnegative profiles vanishing at the front.
    """
    n = len(state.U) - 1
    if n < 3:
        raise ConfigError("boundary flux needs at least 3 cells")
    dxi = 1.0 / n
    fu = (float(state.U[n - 2]) - 4.0 * float(state.U[n - 1])) / (2.0 * dxi * state.s)
    fv = (float(state.V[n - 2]) - 4.0 * float(state.V[n - 1])) / (2.0 * dxi * state.s)
    return fu, fv


def front_speed(flux_u: float, flux_v: float, params: ModelParams) -> float:
    """Stefan rule: s' = -mu (u_x + rho v_x) at the front."""
    return -params.mu * (flux_u + params.rho * flux_v)


def _workspaces(n: int):
    return (np.empty(n + 1), np.empty(n + 1), np.empty(n + 1),
            np.empty(n + 1), np.empty(n + 1))


def transformed_step(state: SimState, params: ModelParams, kind: ProblemKind,
                     dt: float) -> SimState:
    """Advance one step of the front-fixed scheme; the input is not mutated.

    Raises on non-finite values, undershoots below tolerance, front
    retreat, or a dt that violates the advection stability constraint.
    """
    kind = ProblemKind.parse(kind)
    state.validate(kind)
    if not dt > 0.0:
        raise ConfigError("dt must be positive")
    n = len(state.U) - 1
    U = np.array(state.U, dtype=float)
    V = np.array(state.V, dtype=float)
    xi = np.arange(n + 1) / n
    Un, Vn, rhs_u, rhs_v, cp = _workspaces(n)
    status, s_new, sp, _, _ = _stepper.step_once(
        U, V, Un, Vn, rhs_u, rhs_v, cp, xi, 1.0 / n, state.s, dt,
        params.mu, params.rho, params.k, params.h, params.r, params.D,
        kind is ProblemKind.DFB, math.inf, math.inf)
    if status != _stepper.OK:
        exc_type, message = _STATUS_ERRORS[status]
        raise exc_type(message, t=state.t, step=1)
    return SimState(t=state.t + dt, s=s_new, s_prime=sp, U=U, V=V)


def _resample(init: InitialData, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = init.s0 * np.arange(n + 1) / n
    U0 = np.interp(x, init.x, init.u0)
    V0 = np.interp(x, init.x, init.v0)
    return U0, V0


def _ceilings(params: ModelParams, init: InitialData, U0: np.ndarray, V0: np.ndarray,
              eps_scheme: float) -> tuple[float, float]:
    """Monitored ceilings for profiles and front speed.

    The profile ceiling is M (1 + eps) with M = max(1, sup u0, sup v0).
    The speed ceiling additionally covers the initial front gradient:
    steep initial bumps legitimately launch the front faster than mu M,
    and the gradient scale relaxes from there.
    """
    n = len(U0) - 1
    dxi = 1.0 / n
    fu = (U0[n - 2] - 4.0 * U0[n - 1]) / (2.0 * dxi * params.s0)
    fv = (V0[n - 2] - 4.0 * V0[n - 1]) / (2.0 * dxi * params.s0)
    g0 = max(-float(fu), -float(fv), 0.0)
    m = a_priori_bound(init)
    m_cap = m * (1.0 + eps_scheme)
    speed_cap = params.mu * (1.0 + params.rho) * max(m, g0) * (1.0 + eps_scheme)
    return m_cap, speed_cap


def suggest_dt(params: ModelParams, init: InitialData, grid: GridSpec, *,
               eps_scheme: float = EPS_SCHEME, safety: float = 0.9) -> float:
    """Largest dt (capped by grid.dt) keeping the front CFL satisfiable.

    The monitored speed ceiling bounds s' for the whole run, and s only
    grows, so a dt that passes the constraint at t = 0 with that ceiling
    passes at every accepted step.  Used by probe drivers that scan mu
    over orders of magnitude.
    """
    U, V = _resample(init, grid.n_cells)
    _, speed_cap = _ceilings(params, init, U, V, eps_scheme)
    if speed_cap <= 0.0:
        return grid.dt
    dxi = 1.0 / grid.n_cells
    return min(grid.dt, safety * _stepper.CFL_FRACTION * dxi * params.s0 / speed_cap)


def _raise_step_error(status: int, record: RunRecord, t: float, step: int):
    exc_type, message = _STATUS_ERRORS[status]
    exc = exc_type(message, t=t, step=step)
    record.failure = f"{exc_type.__name__}: {message}"
    exc.record = record
    raise exc


def simulate(params: ModelParams, kind: ProblemKind, init: InitialData,
             grid: GridSpec, *, stop_when_s_exceeds: float | None = None,
             eps_scheme: float = EPS_SCHEME) -> RunRecord:
    """Run the free-boundary system from t = 0 to grid.t_max.

    Records one series row per step and a profile snapshot every
    ``snapshot_stride`` steps (plus the final state).  If
    ``stop_when_s_exceeds`` is set, the run ends as soon as the front
    passes that value (used for spreading certificates).

    On a numerical failure the raised :class:`SolverError` carries the
    partial record (``exc.record``) for post-mortem inspection.
    """
    kind = ProblemKind.parse(kind)
    init.validate(kind)
    if abs(init.s0 - params.s0) > 1e-12 * max(1.0, params.s0):
        raise ConfigError(f"initial data lives on [0, {init.s0}] but s0 = {params.s0}")
    n = grid.n_cells
    if params.s0 < 10.0 / n:
        raise ConfigError(f"s0 = {params.s0} is below the resolution floor 10/n_cells = {10.0 / n}")

    U, V = _resample(init, n)
    m_cap, speed_cap = _ceilings(params, init, U, V, eps_scheme)
    n_steps = grid.n_steps
    stride = grid.effective_stride()

    state0 = SimState(t=0.0, s=params.s0, s_prime=0.0, U=U, V=V)
    fu0, fv0 = boundary_flux(state0)
    sp0 = front_speed(fu0, fv0, params)

    series = [np.empty(n_steps + 1) for _ in range(5)]
    ser_t, ser_s, ser_sp, ser_su, ser_sv = series
    ser_t[0], ser_s[0], ser_sp[0] = 0.0, params.s0, sp0
    ser_su[0], ser_sv[0] = float(np.max(U)), float(np.max(V))
    snapshots = [Snapshot(0.0, params.s0, U.copy(), V.copy())]

    record = RunRecord(
        params=params, kind=kind, grid=grid, init=init,
        t=ser_t, s=ser_s, s_prime=ser_sp, sup_u=ser_su, sup_v=ser_sv,
        snapshots=snapshots, snapshot_stride=stride,
        m_ceiling=m_cap, speed_ceiling=speed_cap)

    if sp0 < 0.0:
        record.t, record.s, record.s_prime = ser_t[:1], ser_s[:1], ser_sp[:1]
        record.sup_u, record.sup_v = ser_su[:1], ser_sv[:1]
        _raise_step_error(_stepper.RETREAT, record, 0.0, 0)

    _march_into(record, state_s=params.s0, state_t=0.0, U=U, V=V,
                done_steps=0, total_steps=n_steps,
                stop_when_s_exceeds=stop_when_s_exceeds)
    return record


def extend_run(record: RunRecord, t_max: float, *,
               stop_when_s_exceeds: float | None = None) -> RunRecord:
    """Continue a completed run to a later horizon, bit-identically.

    The continuation starts from the exact final state (the last
    snapshot always coincides with the end of the series), so running to
    T directly and running to T/2 then extending produce the same series.
    """
    if record.failure is not None:
        raise ConfigError("cannot extend a failed run")
    if record.init is None:
        raise ConfigError("record carries no initial data; cannot extend")
    grid = record.grid
    new_grid = GridSpec(grid.n_cells, grid.dt, t_max, grid.snapshot_stride)
    done = len(record.t) - 1
    total = new_grid.n_steps
    if total < done:
        raise ConfigError(f"t_max = {t_max} is before the checkpointed time {record.final_t}")

    last = record.snapshots[-1]
    if last.t != record.final_t:
        raise ConfigError("record does not end on a snapshot; cannot extend")
    U, V = last.U.copy(), last.V.copy()

    series_old = (record.t, record.s, record.s_prime, record.sup_u, record.sup_v)
    series = [np.empty(total + 1) for _ in range(5)]
    for new, old in zip(series, series_old):
        new[:done + 1] = old

    extended = RunRecord(
        params=record.params, kind=record.kind, grid=new_grid, init=record.init,
        t=series[0], s=series[1], s_prime=series[2], sup_u=series[3], sup_v=series[4],
        snapshots=list(record.snapshots), snapshot_stride=new_grid.effective_stride(),
        m_ceiling=record.m_ceiling, speed_ceiling=record.speed_ceiling)
    _march_into(extended, state_s=float(record.s[-1]), state_t=float(record.t[-1]),
                U=U, V=V, done_steps=done, total_steps=total,
                stop_when_s_exceeds=stop_when_s_exceeds)
    return extended


def _march_into(record: RunRecord, *, state_s: float, state_t: float,
                U: np.ndarray, V: np.ndarray, done_steps: int, total_steps: int,
                stop_when_s_exceeds: float | None) -> None:
    """March from step ``done_steps`` to ``total_steps``, mutating ``record``."""
    params, kind = record.params, record.kind
    n = record.grid.n_cells
    dt = record.grid.dt
    stride = record.snapshot_stride
    lam_stop = -1.0 if stop_when_s_exceeds is None else float(stop_when_s_exceeds)
    xi = np.arange(n + 1) / n
    Un, Vn, rhs_u, rhs_v, cp = _workspaces(n)
    dirichlet = kind is ProblemKind.DFB

    def _trim(g: int):
        record.t = record.t[:g + 1]
        record.s = record.s[:g + 1]
        record.s_prime = record.s_prime[:g + 1]
        record.sup_u = record.sup_u[:g + 1]
        record.sup_v = record.sup_v[:g + 1]

    g, s, t = done_steps, state_s, state_t
    if lam_stop > 0.0 and s > lam_stop:
        _trim(g)
        record.stop_reason = "s-exceeded-threshold"
        return
    while g < total_steps:
        chunk = min(stride - g % stride, total_steps - g)
        status, did, s, t = _stepper.march(
            U, V, s, t, chunk, dt,
            params.mu, params.rho, params.k, params.h, params.r, params.D,
            dirichlet, record.m_ceiling, record.speed_ceiling, xi,
            Un, Vn, rhs_u, rhs_v, cp,
            record.t, record.s, record.s_prime, record.sup_u, record.sup_v,
            g + 1, lam_stop)
        g += did
        if status == _stepper.OK:
            if g % stride == 0 or g == total_steps:
                record.snapshots.append(Snapshot(t, s, U.copy(), V.copy()))
            continue
        if status == _stepper.STOP_SPREADING:
            _trim(g)
            record.snapshots.append(Snapshot(t, s, U.copy(), V.copy()))
            record.stop_reason = "s-exceeded-threshold"
            return
        _trim(g)
        record.snapshots.append(Snapshot(t, s, U.copy(), V.copy()))
        _raise_step_error(status, record, t, g + 1)
    _trim(total_steps)


# ---------------------------------------------------------------------------
# serialization

SERIES_HEADER = "t,s,s_prime,sup_u,sup_v"
PROFILE_HEADER = "x,u,v"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_record(record: RunRecord, out_dir: str | Path,
                 extra_metadata: dict | None = None) -> Path:
    """Write series.csv, profile_<index>.csv files and metadata.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "series.csv", "w") as f:
        f.write(SERIES_HEADER + "\n")
        cols = (record.t, record.s, record.s_prime, record.sup_u, record.sup_v)
        f.writelines(
            ",".join(_fmt(col[i]) for col in cols) + "\n"
            for i in range(len(record.t)))

    snap_meta = []
    for idx, snap in enumerate(record.snapshots):
        name = f"profile_{idx:04d}.csv"
        x = snap.x
        with open(out / name, "w") as f:
            f.write(PROFILE_HEADER + "\n")
            f.writelines(
                f"{_fmt(x[i])},{_fmt(snap.U[i])},{_fmt(snap.V[i])}\n"
                for i in range(len(x)))
        snap_meta.append({"index": idx, "file": name, "t": float(snap.t), "s": float(snap.s)})

    from . import __version__
    meta = {
        "format_version": 1,
        "package_version": __version__,
        "kind": record.kind.value,
        "params": {k: float(v) for k, v in vars(record.params).items()},
        "grid": {
            "n_cells": record.grid.n_cells,
            "dt": record.grid.dt,
            "t_max": record.grid.t_max,
            "snapshot_stride": record.snapshot_stride,
        },
        "init": None if record.init is None else {
            "preset": record.init.preset.value,
            "amplitude_u": float(record.init.amplitude_u),
            "amplitude_v": float(record.init.amplitude_v),
            "n_samples": len(record.init.x),
        },
        "ceilings": {"profile": record.m_ceiling, "speed": record.speed_ceiling},
        "series_rows": int(len(record.t)),
        "snapshots": snap_meta,
        "failure": record.failure,
        "stop_reason": record.stop_reason,
    }
    if extra_metadata:
        meta.update(extra_metadata)
    with open(out / "metadata.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return out


def load_record(run_dir: str | Path) -> RunRecord:
    """Rebuild a RunRecord from a run directory written by ``write_record``.

    Initial data is not reconstructed (``record.init`` is None), which is
    enough for classification and sandwich checks.
    """
    run = Path(run_dir)
    with open(run / "metadata.json") as f:
        meta = json.load(f)
    params = ModelParams(**meta["params"])
    kind = ProblemKind.parse(meta["kind"])
    g = meta["grid"]
    grid = GridSpec(g["n_cells"], g["dt"], g["t_max"], g["snapshot_stride"])
    table = np.loadtxt(run / "series.csv", delimiter=",", skiprows=1, ndmin=2)
    snapshots = []
    for sm in meta["snapshots"]:
        prof = np.loadtxt(run / sm["file"], delimiter=",", skiprows=1, ndmin=2)
        snapshots.append(Snapshot(sm["t"], sm["s"], prof[:, 1].copy(), prof[:, 2].copy()))
    return RunRecord(
        params=params, kind=kind, grid=grid, init=None,
        t=table[:, 0], s=table[:, 1], s_prime=table[:, 2],
        sup_u=table[:, 3], sup_v=table[:, 4],
        snapshots=snapshots, snapshot_stride=g["snapshot_stride"],
        m_ceiling=meta["ceilings"]["profile"], speed_ceiling=meta["ceilings"]["speed"],
        failure=meta["failure"], stop_reason=meta["stop_reason"])
