"""Explicit vanishing supersolution and the certified small-mu search (DFB).

The candidate envelope is a decaying sine bump under a saturating cap:

    sigma(t) = s0 (1 + delta - (delta/2) e^{-gamma t})
    w(t, x)  = K e^{-gamma t} sin(pi x / sigma(t))

If w dominates both initial profiles, satisfies the two reaction
inequalities w_t - w_xx >= w(1-w) and w_t - D w_xx >= r w(1-w), and the
cap outruns the Stefan rule, then by comparison the true front stays
below sigma, hence s stays below s0 (1 + delta) forever and the run
vanishes.  All derivatives are evaluated in closed form; verification is
pointwise on a dense sample grid (a numerical certificate, not interval
arithmetic, and labelled as such in reports).

Only the mu-dependent front inequality limits the certified coefficient,
and it is linear in mu, so each passing (delta, gamma, K) tuple yields
its largest certified mu directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InitialData, ModelParams, ProblemKind, lambda_threshold
from .errors import ConfigError, NoThresholdError, NoWitnessError

#: certified coefficients are shaved by this factor so that re-verification
#: on refined grids is robust to roundoff in the minimizing ratio
SAFETY_SHAVE = 1e-9


@dataclass(frozen=True)
class SupersolutionParams:
    """A candidate (delta, gamma, K) and the problem it must dominate."""

    delta: float
    gamma: float
    K: float
    model: ModelParams
    init: InitialData

    def __post_init__(self):
        if not (self.delta > 0.0 and self.gamma > 0.0):
            raise ConfigError("delta and gamma must be positive")
        if self.K < 0.0:
            raise ConfigError("K must be nonnegative")

    def sigma(self, t):
        s0, d = self.model.s0, self.delta
        return s0 * (1.0 + d - 0.5 * d * np.exp(-self.gamma * np.asarray(t, dtype=float)))

    def sigma_prime(self, t):
        s0, d = self.model.s0, self.delta
        return s0 * self.gamma * 0.5 * d * np.exp(-self.gamma * np.asarray(t, dtype=float))

    @property
    def sigma_infinity(self) -> float:
        return self.model.s0 * (1.0 + self.delta)


def eval_barrier(p: SupersolutionParams, t: float, x: float) -> tuple[float, float]:
    """Return (sigma(t), w(t, x)); x must lie in [0, sigma(t)]."""
    if t < 0.0:
        raise ConfigError("t must be nonnegative")
    sigma = float(p.sigma(t))
    if not 0.0 <= x <= sigma:
        raise ConfigError(f"x = {x} outside [0, sigma(t) = {sigma}]")
    w = p.K * math.exp(-p.gamma * t) * math.sin(math.pi * x / sigma)
    return sigma, w


@dataclass(frozen=True)
class BarrierGrid:
    """Dense sample grid for the pointwise inequality checks."""

    t_check: float = 50.0
    nt: int = 400
    nx: int = 400

    def __post_init__(self):
        if self.t_check <= 0.0 or self.nt < 2 or self.nx < 2:
            raise ConfigError("need t_check > 0 and at least 2 samples per axis")

    def refined(self) -> "BarrierGrid":
        return BarrierGrid(self.t_check, 2 * self.nt, 2 * self.nx)


@dataclass(frozen=True)
class SupersolutionReport:
    passed: bool
    margins: dict  # pde_u, pde_v, initial, front -> worst (most negative) value
    mu: float
    grid: BarrierGrid

    def as_dict(self) -> dict:
        return {"passed": self.passed, "mu": self.mu,
                "worst_margins": dict(self.margins),
                "grid": {"nt": self.grid.nt, "nx": self.grid.nx}}


def _pointwise_margins(p: SupersolutionParams, params: ModelParams, grid: BarrierGrid):
    """Worst values of the mu-independent inequalities over the sample grid."""
    ts = np.linspace(0.0, grid.t_check, grid.nt)
    ys = np.linspace(0.0, 1.0, grid.nx)
    sig = p.sigma(ts)[:, None]
    sigp = p.sigma_prime(ts)[:, None]
    decay = p.K * np.exp(-p.gamma * ts)[:, None]
    siny = np.sin(math.pi * ys)[None, :]
    cosy = np.cos(math.pi * ys)[None, :]

    w = decay * siny
    w_t = decay * (-p.gamma * siny - math.pi * ys[None, :] * (sigp / sig) * cosy)
    w_xx = -(math.pi ** 2 / sig ** 2) * decay * siny
    reaction = w * (1.0 - w)
    margin_u = float(np.min(w_t - w_xx - reaction))
    margin_v = float(np.min(w_t - params.D * w_xx - params.r * reaction))

    x0 = p.init.x
    w0 = p.K * np.sin(math.pi * x0 / float(p.sigma(0.0)))
    margin_init = float(np.min(w0 - np.maximum(p.init.u0, p.init.v0)))
    return margin_u, margin_v, margin_init, ts


def _front_margin(p: SupersolutionParams, params: ModelParams, mu: float,
                  ts: np.ndarray) -> float:
    sigp = p.sigma_prime(ts)
    wx_front = -math.pi * p.K * np.exp(-p.gamma * ts) / p.sigma(ts)
    return float(np.min(sigp + mu * (1.0 + params.rho) * wx_front))


def verify_supersolution(p: SupersolutionParams, mu: float,
                         params: ModelParams | None = None,
                         grid: BarrierGrid = BarrierGrid()) -> SupersolutionReport:
    """Evaluate all four inequalities on the sample grid and report margins.

    Failure is an outcome, not an exception.  Derivatives of w are closed
    form, never differenced.
    """
    params = params or p.model
    margin_u, margin_v, margin_init, ts = _pointwise_margins(p, params, grid)
    margin_front = _front_margin(p, params, mu, ts)
    margins = {"pde_u": margin_u, "pde_v": margin_v,
               "initial": margin_init, "front": margin_front}
    passed = all(v >= 0.0 for v in margins.values())
    return SupersolutionReport(passed, margins, mu, grid)


@dataclass(frozen=True)
class SearchSpec:
    """Logarithmic lattice over (delta, gamma, K/sup-amplitude)."""

    deltas: tuple = (0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4)
    gammas: tuple = tuple(float(g) for g in np.geomspace(0.01, 1.0, 9))
    k_factors: tuple = (1.05, 1.2, 1.5, 2.0, 3.0)
    grid: BarrierGrid = field(default_factory=BarrierGrid)


def search_mu0(params: ModelParams, init: InitialData,
               spec: SearchSpec = SearchSpec(),
               kind: ProblemKind = ProblemKind.DFB) -> tuple[float, SupersolutionParams]:
    """Find the largest certified vanishing coefficient over the lattice.

    For each tuple passing the mu-independent inequalities, the front
    inequality (linear in mu, and slackest at large sigma) gives the
    largest admissible mu; the best tuple wins.  Any simulation with
    mu <= mu0 must then stay below s0 (1 + delta) and vanish.
    """
    kind = ProblemKind.parse(kind)
    if kind is not ProblemKind.DFB:
        raise ConfigError("the explicit supersolution certificate covers DFB only")
    lam = lambda_threshold(params, kind)
    if params.s0 >= lam:
        raise NoThresholdError(
            f"no vanishing certificate: s0 = {params.s0} >= Lambda = {lam:.6g}")
    init.validate(kind)
    amplitude = max(init.sup_u, init.sup_v)
    if amplitude <= 0.0:
        raise ConfigError("initial data has zero amplitude")

    best_mu = 0.0
    best: SupersolutionParams | None = None
    for delta in spec.deltas:
        for gamma in spec.gammas:
            for factor in spec.k_factors:
                candidate = SupersolutionParams(delta, gamma, factor * amplitude,
                                                params, init)
                m_u, m_v, m_init, ts = _pointwise_margins(candidate, params, spec.grid)
                if min(m_u, m_v, m_init) < 0.0:
                    continue
                sigp = candidate.sigma_prime(ts)
                wx_front = math.pi * candidate.K * np.exp(-gamma * ts) / candidate.sigma(ts)
                mu_max = float(np.min(sigp / ((1.0 + params.rho) * wx_front)))
                mu_cert = mu_max * (1.0 - SAFETY_SHAVE)
                if mu_cert > best_mu:
                    best_mu = mu_cert
                    best = candidate
    if best is None:
        raise NoWitnessError(
            "no witness found on the lattice "
            f"delta in {spec.deltas[0]}..{spec.deltas[-1]}, "
            f"gamma in {spec.gammas[0]:.3g}..{spec.gammas[-1]:.3g}, "
            f"K/amplitude in {spec.k_factors[0]}..{spec.k_factors[-1]}")
    return best_mu, best


def certificate_dict(mu0: float, witness: SupersolutionParams,
                     report: SupersolutionReport, lam: float) -> dict:
    """Certificate document; includes the implied front bound next to Lambda."""
    return {
        "delta": witness.delta,
        "gamma": witness.gamma,
        "K": witness.K,
        "mu0": mu0,
        "worst_margins": dict(report.margins),
        "grid": {"nt": report.grid.nt, "nx": report.grid.nx},
        "s_infinity_bound": witness.sigma_infinity,
        "lambda": lam,
        "certificate_kind": "pointwise-sampled (not interval arithmetic)",
    }
