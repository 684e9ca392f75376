"""Spatially homogeneous reference dynamics and the exclusion-bound iteration.

Spreading runs forget their geometry in the long run: behind the front
the densities follow the plain competition ODEs

    u' = u (1 - u - k v),    v' = r v (1 - v - h u),

whose limits are closed-form targets for the PDE.  The geometric
iteration refines alternating upper/lower population bounds in the
``0 < h < 1 <= k`` regime and has an explicit partial-sum form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _stepper
from .core import ModelParams
from .errors import BlowUpError, ConfigError, FblvError

#: fixed step used by the classic fourth-order integrator
ODE_DT = 1e-3


@dataclass(frozen=True)
class OdeTrajectory:
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def final(self) -> tuple[float, float]:
        return float(self.u[-1]), float(self.v[-1])


def integrate_ode(params: ModelParams, u0: float, v0: float, t_max: float,
                  dt: float = ODE_DT, sample_stride: int = 1) -> OdeTrajectory:
    """Integrate the competition ODEs from (u0, v0) with fixed-step RK4."""
    if not (u0 > 0.0 and v0 > 0.0):
        raise ConfigError("initial ODE state must be strictly positive")
    if t_max < 0.0 or dt <= 0.0 or sample_stride < 1:
        raise ConfigError("t_max must be >= 0, dt > 0, sample_stride >= 1")
    n_steps = int(round(t_max / dt))
    size = n_steps // sample_stride + 2
    out_t = np.empty(size)
    out_u = np.empty(size)
    out_v = np.empty(size)
    status, count = _stepper.ode_rk4(
        float(u0), float(v0), params.k, params.h, params.r,
        dt, n_steps, sample_stride, out_t, out_u, out_v)
    if status != 0:
        raise BlowUpError("ODE state became non-finite", t=float(out_t[count - 1]))
    return OdeTrajectory(out_t[:count].copy(), out_u[:count].copy(), out_v[:count].copy())


def write_trajectory_csv(traj: OdeTrajectory, path) -> None:
    with open(path, "w") as f:
        f.write("t,u,v\n")
        f.writelines(
            f"{float(traj.t[i])!r},{float(traj.u[i])!r},{float(traj.v[i])!r}\n"
            for i in range(len(traj.t)))


@dataclass(frozen=True)
class IterationSeq:
    """Alternating bounds u_bar_j (upper for u) and v_low_j (lower for v).

    ``stopped_at`` is the first index j with k * v_low_j >= 1, where the
    iteration's hypothesis closes the argument and the sequence ends;
    None if all J requested terms were produced.
    """

    u_bar: np.ndarray
    v_low: np.ndarray
    sigma: float  # the contraction ratio h*k
    stopped_at: int | None = None

    def __len__(self) -> int:
        return len(self.u_bar)


def iterate_bounds(h: float, k: float, J: int) -> IterationSeq:
    """Run the bound refinement u_bar_{j+1} = 1 - k v_low_j, v_low_{j+1} = 1 - h u_bar_{j+1}.

    Seeds u_bar_1 = 1 and v_low_1 = 1 - h; requires 0 < h < 1 <= k.
    Every produced v_low_j is checked against the partial-sum form
    (1-h)(1 + sigma + ... + sigma^{j-1}) with sigma = h k.
    """
    if not (0.0 < h < 1.0 <= k):
        raise ConfigError(f"iteration requires 0 < h < 1 <= k, got h={h}, k={k}")
    if J < 1:
        raise ConfigError("J must be at least 1")
    sigma = h * k
    u_bar = [1.0]
    v_low = [1.0 - h * 1.0]
    power = 1.0
    partial = 1.0
    stopped_at = None
    for j in range(1, J + 1):
        closed = (1.0 - h) * partial
        if abs(v_low[-1] - closed) > 1e-12:
            raise FblvError(
                f"iteration and partial-sum form disagree at j={j}: "
                f"{v_low[-1]!r} vs {closed!r}")
        if k * v_low[-1] >= 1.0:
            stopped_at = j
            break
        if j == J:
            break
        u_next = 1.0 - k * v_low[-1]
        u_bar.append(u_next)
        v_low.append(1.0 - h * u_next)
        power *= sigma
        partial += power
    return IterationSeq(np.array(u_bar), np.array(v_low), sigma, stopped_at)


def write_iteration_csv(seq: IterationSeq, path) -> None:
    with open(path, "w") as f:
        f.write("j,u_bar_j,v_low_j\n")
        f.writelines(
            f"{j + 1},{float(seq.u_bar[j])!r},{float(seq.v_low[j])!r}\n"
            for j in range(len(seq)))
