"""Steady-state barrier profiles on a truncated half line.

Weak competition admits positive steady states on x > 0 with zero
Dirichlet data at the origin, sandwiched between four explicit barrier
curves:

    u_bar : -u'' = u (1 - u),          u(0) = 0, increasing to 1
    v_bar : -D v'' = r v (1 - v),      likewise
    v_low : -D v'' = v (r(1 - h u_bar) - r v)
    u_low : -u''   = u ((1 - k v_bar) - u)

All four are computed by damped Newton on a centered-difference
discretization, with Dirichlet closure at the truncation point set to
the known far-field limit (coefficient limit / quadratic rate), whose
truncation error is exponentially small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import ModelParams, ProblemKind, Regime, classify_regime
from .errors import ConfigError, SteadySolveError

#: required truncation length in units of the far-field diffusion length
MIN_LENGTHS = 20.0


@dataclass(frozen=True)
class HalfLineGrid:
    """Uniform truncation grid: nodes x_j = j L / m for j = 0..m."""

    L: float = 40.0
    m: int = 4000

    def __post_init__(self):
        if self.L < 20.0:
            raise ConfigError(f"truncation length must be >= 20, got {self.L}")
        if self.m < 200:
            raise ConfigError(f"node count must be >= 200, got {self.m}")

    @property
    def hx(self) -> float:
        return self.L / self.m

    @property
    def x(self) -> np.ndarray:
        return self.L * np.arange(self.m + 1) / self.m


def _newton_bvp(d: float, f: np.ndarray, lamb: float, closure: float,
                grid: HalfLineGrid, max_iter: int = 100, tol: float = 1e-9) -> np.ndarray:
    """Solve d y'' + y (f(x) - lamb y) = 0 with y(0) = 0, y(L) = closure.

    Damped Newton; the step is halved until the residual norm decreases
    (plain Newton can overshoot into negative values where the
    nonlinearity changes character).  The initial guess is a tanh ramp
    saturating at the closure over one diffusion length: a linear ramp
    over the whole domain sends the damped iteration into a
    sign-indefinite solution branch on long grids.
    """
    hx, m = grid.hx, grid.m
    fi = f[1:-1]
    scale = math.sqrt(d / float(np.min(f)))
    y = closure * np.tanh(grid.x / (2.0 * scale))
    y[0] = 0.0
    y[-1] = closure
    inv_h2 = 1.0 / (hx * hx)

    def residual(vec: np.ndarray) -> np.ndarray:
        inner = vec[1:-1]
        lap = (vec[:-2] - 2.0 * inner + vec[2:]) * inv_h2
        return d * lap + inner * (fi - lamb * inner)

    F = residual(y)
    norm = float(np.max(np.abs(F)))
    ab = np.empty((3, m - 1))
    ab[0, :] = d * inv_h2
    ab[2, :] = d * inv_h2
    for iteration in range(max_iter):
        if norm <= tol:
            return y
        ab[1, :] = -2.0 * d * inv_h2 + fi - 2.0 * lamb * y[1:-1]
        delta = solve_banded((1, 1), ab, -F)
        eta = 1.0
        while True:
            trial = y.copy()
            trial[1:-1] += eta * delta
            F_trial = residual(trial)
            norm_trial = float(np.max(np.abs(F_trial)))
            if norm_trial < norm:
                y, F, norm = trial, F_trial, norm_trial
                break
            eta *= 0.5
            if eta < 2.0 ** -40:
                raise SteadySolveError(
                    "Newton damping stalled", residual=norm, iterations=iteration)
    raise SteadySolveError("Newton did not converge", residual=norm, iterations=max_iter)


def solve_logistic_halfline(d: float, alpha: float, grid: HalfLineGrid) -> np.ndarray:
    """Positive solution of -d y'' = alpha y (1 - y), y(0) = 0, on [0, L].

    Closed at the truncation point with the far-field limit 1; the
    returned profile increases from 0 toward 1.
    """
    if d <= 0.0 or alpha <= 0.0:
        raise ConfigError("diffusivity and rate must be positive")
    scale = math.sqrt(d / alpha)
    if grid.L < MIN_LENGTHS * scale:
        raise ConfigError(
            f"truncation L={grid.L} is under {MIN_LENGTHS} diffusion lengths ({scale:g})")
    f = np.full(grid.m + 1, alpha)
    y = _newton_bvp(d, f, alpha, 1.0, grid)
    if np.any(np.diff(y) < -1e-12):
        raise SteadySolveError("logistic profile is not increasing")
    # interior values live in (0, 1); the far tail may sit at 1 up to roundoff
    if np.any(y[1:-1] <= 0.0) or np.any(y[1:-1] >= 1.0 + 1e-12):
        raise SteadySolveError("logistic profile left the interval (0, 1)")
    return y


def solve_coupled_halfline(f: np.ndarray, d: float, lamb: float,
                           grid: HalfLineGrid) -> np.ndarray:
    """Positive solution of -d u'' = u (f(x) - lamb u), u(0) = 0.

    ``f`` is tabulated on the grid nodes and must have positive infimum;
    the closure at L is the far-field value f(L)/lamb.
    """
    f = np.asarray(f, dtype=float)
    if len(f) != grid.m + 1:
        raise ConfigError("coefficient profile must be tabulated on the grid nodes")
    f0 = float(np.min(f))
    if f0 <= 0.0:
        raise ConfigError(f"coefficient profile must have positive infimum, got {f0}")
    if d <= 0.0 or lamb <= 0.0:
        raise ConfigError("diffusivity and rate must be positive")
    scale = math.sqrt(d / f0)
    if grid.L < MIN_LENGTHS * scale:
        raise ConfigError(
            f"truncation L={grid.L} is under {MIN_LENGTHS} diffusion lengths ({scale:g})")
    closure = float(f[-1]) / lamb
    u = _newton_bvp(d, f, lamb, closure, grid)
    if np.any(u[1:-1] <= 0.0):
        raise SteadySolveError("coupled profile lost positivity")
    return u


@dataclass(frozen=True)
class SteadyProfiles:
    """The four barrier curves on a shared half-line grid."""

    grid: HalfLineGrid
    u_bar: np.ndarray
    v_bar: np.ndarray
    u_low: np.ndarray
    v_low: np.ndarray

    def to_csv(self, path) -> None:
        x = self.grid.x
        with open(path, "w") as f:
            f.write("x,u_bar,v_bar,u_low,v_low\n")
            f.writelines(
                f"{float(x[i])!r},{float(self.u_bar[i])!r},{float(self.v_bar[i])!r},"
                f"{float(self.u_low[i])!r},{float(self.v_low[i])!r}\n"
                for i in range(len(x)))


def build_barriers(params: ModelParams, grid: HalfLineGrid) -> SteadyProfiles:
    """Compose the four barrier solves and verify their mutual ordering."""
    if classify_regime(params) is not Regime.WEAK_COMPETITION:
        raise ConfigError(
            f"barriers require weak competition 0 < h, k < 1; got h={params.h}, k={params.k}")
    u_bar = solve_logistic_halfline(1.0, 1.0, grid)
    v_bar = solve_logistic_halfline(params.D, params.r, grid)
    v_low = solve_coupled_halfline(params.r * (1.0 - params.h * u_bar),
                                   params.D, params.r, grid)
    u_low = solve_coupled_halfline(1.0 - params.k * v_bar, 1.0, 1.0, grid)

    profiles = SteadyProfiles(grid, u_bar, v_bar, u_low, v_low)
    if np.max(u_low - u_bar) > 1e-8 or np.max(v_low - v_bar) > 1e-8:
        raise SteadySolveError("internal consistency: lower barrier exceeded upper barrier")
    if np.max(u_low) > (1.0 - params.k) + 1e-6:
        raise SteadySolveError("internal consistency: u_low exceeded 1 - k")
    if np.max(v_low) > (1.0 - params.h) + 1e-6:
        raise SteadySolveError("internal consistency: v_low exceeded 1 - h")
    return profiles


@dataclass(frozen=True)
class SandwichReport:
    """Worst violations of the barrier sandwich over a spatial window."""

    window: tuple[float, float]
    slack: float
    max_lower_violation_u: float
    max_upper_violation_u: float
    max_lower_violation_v: float
    max_upper_violation_v: float

    @property
    def passed(self) -> bool:
        return max(self.max_lower_violation_u, self.max_upper_violation_u,
                   self.max_lower_violation_v, self.max_upper_violation_v) == 0.0

    def as_dict(self) -> dict:
        return {
            "window": list(self.window),
            "slack": self.slack,
            "max_lower_violation_u": self.max_lower_violation_u,
            "max_upper_violation_u": self.max_upper_violation_u,
            "max_lower_violation_v": self.max_lower_violation_v,
            "max_upper_violation_v": self.max_upper_violation_v,
            "passed": self.passed,
        }


def check_sandwich(record, barriers: SteadyProfiles, window: tuple[float, float],
                   slack: float) -> SandwichReport:
    """Check u_low - slack <= u_final <= u_bar + slack (and likewise for v).

    The run's final profile and the barrier curves are interpolated onto
    a common dense grid over ``window``, which must lie inside the final
    front position.
    """
    if slack < 0.0:
        raise ConfigError(f"slack must be nonnegative, got {slack}")
    if record.kind is not ProblemKind.DFB:
        raise ConfigError("the sandwich bound applies to DFB runs")
    lo, hi = float(window[0]), float(window[1])
    snap = record.snapshots[-1]
    if not (0.0 <= lo < hi):
        raise ConfigError(f"window must satisfy 0 <= lo < hi, got {window}")
    if hi > snap.s:
        raise ConfigError(f"window [{lo}, {hi}] extends beyond the final front s = {snap.s}")
    if hi > barriers.grid.L:
        raise ConfigError(f"window [{lo}, {hi}] extends beyond the barrier grid L = {barriers.grid.L}")

    xs = np.linspace(lo, hi, 801)
    x_run = snap.x
    u_run = np.interp(xs, x_run, snap.U)
    v_run = np.interp(xs, x_run, snap.V)
    xb = barriers.grid.x
    u_lo = np.interp(xs, xb, barriers.u_low)
    u_hi = np.interp(xs, xb, barriers.u_bar)
    v_lo = np.interp(xs, xb, barriers.v_low)
    v_hi = np.interp(xs, xb, barriers.v_bar)

    def worst(excess: np.ndarray) -> float:
        return float(max(0.0, np.max(excess)))

    return SandwichReport(
        window=(lo, hi), slack=slack,
        max_lower_violation_u=worst(u_lo - slack - u_run),
        max_upper_violation_u=worst(u_run - u_hi - slack),
        max_lower_violation_v=worst(v_lo - slack - v_run),
        max_upper_violation_v=worst(v_run - v_hi - slack),
    )
