"""Model parameters, regime classification, thresholds and a-priori bounds.

Everything here is a pure function on immutable values; the solver,
classifier and CLI all build on these primitives.

The model: two competing species with densities u, v occupy ``[0, s(t)]``
and obey

    u_t = u_xx     + u (1 - u - k v)
    v_t = D v_xx + r v (1 - v - h u)

with a moving right endpoint driven by the Stefan rule
``s'(t) = -mu (u_x + rho v_x)`` evaluated at ``x = s(t)``.  The left
boundary is either no-flux (NFB) or hostile/Dirichlet (DFB).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UncoveredRegimeError

#: relative slack granted to discrete solutions over the exact a-priori bounds
EPS_SCHEME = 1e-2


class ProblemKind(enum.Enum):
    """Left-boundary condition selector: no-flux (NFB) or Dirichlet (DFB)."""

    NFB = "NFB"
    DFB = "DFB"

    @classmethod
    def parse(cls, value) -> "ProblemKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigError(f"unknown problem kind {value!r}; expected NFB or DFB") from None


class Regime(enum.Enum):
    """Competition-strength regime, a pure function of (h, k)."""

    WEAK_COMPETITION = "WeakCompetition"  # 0 < h < 1 and 0 < k < 1
    U_WINS = "UWins"                      # 0 < k < 1 <= h
    V_WINS = "VWins"                      # 0 < h < 1 <= k
    UNCOVERED = "Uncovered"               # h >= 1 and k >= 1: no proven limit


class Preset(enum.Enum):
    """Initial-profile families compatible with each boundary condition."""

    COSINE_BUMP = "CosineBump"  # a cos(pi x / (2 s0)); derivative vanishes at 0 -> NFB
    SINE_BUMP = "SineBump"      # a sin(pi x / s0); value vanishes at 0 -> DFB
    TABLE = "Table"


@dataclass(frozen=True)
class ModelParams:
    """The seven positive model constants.

    k, h   : competition coefficients felt by u and v respectively
    r      : growth rate of v (u's rate is normalised to 1)
    D      : diffusivity of v (u's is normalised to 1)
    mu     : front-expansion coefficient in the Stefan rule
    rho    : weight of v's flux in the Stefan rule
    s0     : initial front position
    """

    k: float
    h: float
    r: float
    D: float
    mu: float
    rho: float
    s0: float

    def __post_init__(self):
        # k, h and mu may be exactly 0: switched-off competition reduces to
        # decoupled logistic flows and mu = 0 freezes the front, both of
        # which serve as reference problems.
        for name in ("r", "D", "rho", "s0"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ConfigError(f"parameter {name} must be a positive finite number, got {value!r}")
        for name in ("k", "h", "mu"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ConfigError(f"parameter {name} must be a nonnegative finite number, got {value!r}")


def lambda_threshold(params: ModelParams, kind: ProblemKind) -> float:
    """Critical habitat length: a front beyond it certifies spreading.

    Returns ``(pi/2) min(1, sqrt(D/r))`` for NFB and twice that for DFB.
    Once ``s(t)`` exceeds this value the populations must spread
    (a bounded front would have to stay below it).
    """
    base = 0.5 * math.pi * min(1.0, math.sqrt(params.D / params.r))
    return base if kind is ProblemKind.NFB else 2.0 * base


def classify_regime(params: ModelParams) -> Regime:
    """Partition the (h, k) quadrant by who can exclude whom.

    Boundaries are classified with closed inequalities: e.g. k = 1 with
    h < 1 still counts as V_WINS.
    """
    h, k = params.h, params.k
    if h < 1.0 and k < 1.0:
        return Regime.WEAK_COMPETITION
    if k < 1.0 <= h:
        return Regime.U_WINS
    if h < 1.0 <= k:
        return Regime.V_WINS
    return Regime.UNCOVERED


def coexistence_limit(params: ModelParams) -> tuple[float, float]:
    """Long-time spatially uniform limit of (u, v) in a spreading run.

    Weak competition gives the interior equilibrium
    ``((1-k)/(1-hk), (1-h)/(1-hk))``; one-sided regimes give the
    exclusion states (1, 0) or (0, 1).  Raises for h >= 1, k >= 1
    where no limit is established.
    """
    regime = classify_regime(params)
    if regime is Regime.WEAK_COMPETITION:
        denom = 1.0 - params.h * params.k
        return (1.0 - params.k) / denom, (1.0 - params.h) / denom
    if regime is Regime.U_WINS:
        return 1.0, 0.0
    if regime is Regime.V_WINS:
        return 0.0, 1.0
    raise UncoveredRegimeError(
        f"no proven limit for h={params.h}, k={params.k} (strong competition)")


@dataclass(frozen=True)
class InitSpec:
    """Config-level description of initial data; turned into samples per run.

    ``preset='auto'`` picks the compatible bump for the problem kind.
    Table data is supplied as explicit (x, u0, v0) columns.
    """

    preset: str = "auto"
    amplitude_u: float = 0.5
    amplitude_v: float = 0.5
    table: tuple | None = None  # (x, u0, v0) arrays for preset='table'

    def resolve_preset(self, kind: ProblemKind) -> Preset:
        name = self.preset.lower()
        if name == "auto":
            return Preset.COSINE_BUMP if kind is ProblemKind.NFB else Preset.SINE_BUMP
        table = {
            "cosine": Preset.COSINE_BUMP, "cosinebump": Preset.COSINE_BUMP,
            "sine": Preset.SINE_BUMP, "sinebump": Preset.SINE_BUMP,
            "table": Preset.TABLE,
        }
        if name not in table:
            raise ConfigError(f"unknown init preset {self.preset!r}")
        return table[name]


@dataclass(frozen=True)
class InitialData:
    """Sampled nonnegative initial profiles on [0, s0].

    Profiles vanish at x = s0; NFB data additionally has vanishing
    derivative at x = 0 and DFB data vanishes at x = 0.
    """

    x: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    preset: Preset = Preset.TABLE
    amplitude_u: float = field(default=float("nan"))
    amplitude_v: float = field(default=float("nan"))

    @property
    def s0(self) -> float:
        return float(self.x[-1])

    @property
    def sup_u(self) -> float:
        return float(np.max(self.u0))

    @property
    def sup_v(self) -> float:
        return float(np.max(self.v0))

    def validate(self, kind: ProblemKind) -> None:
        """Check the compatibility conditions for the given boundary kind."""
        x, u0, v0 = self.x, self.u0, self.v0
        if not (len(x) == len(u0) == len(v0)):
            raise ConfigError("initial-data arrays must share one grid")
        if len(x) < 4:
            raise ConfigError("initial data needs at least 4 sample points")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0.0):
            raise ConfigError("initial-data grid must increase strictly from 0")
        if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(v0))):
            raise ConfigError("initial profiles must be finite")
        if u0[-1] != 0.0 or v0[-1] != 0.0:
            raise ConfigError("initial profiles must vanish at x = s0")
        if np.any(u0 < 0.0) or np.any(v0 < 0.0):
            raise ConfigError("initial profiles must be nonnegative")
        if np.any(u0[1:-1] <= 0.0) or np.any(v0[1:-1] <= 0.0):
            raise ConfigError("initial profiles must be positive inside (0, s0)")
        if kind is ProblemKind.DFB:
            if u0[0] != 0.0 or v0[0] != 0.0:
                raise ConfigError("DFB initial profiles must vanish at x = 0")
        else:
            # presets satisfy u0'(0) = 0 analytically; tabulated data gets a
            # discrete sanity check at 5% of the characteristic slope scale
            if self.preset is Preset.SINE_BUMP:
                raise ConfigError("SineBump has nonzero slope at 0; incompatible with NFB")
            if self.preset is Preset.TABLE:
                for name, y in (("u0", u0), ("v0", v0)):
                    slope = abs(-3.0 * y[0] + 4.0 * y[1] - y[2]) / (x[2] - x[0])
                    scale = max(np.max(y), 1e-30) * math.pi / self.s0
                    if slope > 0.05 * scale:
                        raise ConfigError(
                            f"{name} violates the no-flux compatibility condition at x=0 "
                            f"(one-sided slope {slope:.3g})")
        if kind is ProblemKind.NFB and self.preset is Preset.SINE_BUMP:
            raise ConfigError("SineBump is a DFB preset")
        if kind is ProblemKind.DFB and self.preset is Preset.COSINE_BUMP:
            raise ConfigError("CosineBump is an NFB preset")


def make_initial_data(kind: ProblemKind, s0: float, n_samples: int,
                      spec: InitSpec | None = None) -> InitialData:
    """Sample an initial profile family on n_samples+1 uniform nodes of [0, s0]."""
    spec = spec or InitSpec()
    if s0 <= 0.0:
        raise ConfigError("s0 must be positive")
    if n_samples < 3:
        raise ConfigError("need at least 3 cells to sample initial data")
    preset = spec.resolve_preset(kind)
    x = s0 * np.arange(n_samples + 1) / n_samples
    if preset is Preset.TABLE:
        if spec.table is None:
            raise ConfigError("preset 'table' requires explicit (x, u0, v0) data")
        tx, tu, tv = (np.asarray(col, dtype=float) for col in spec.table)
        init = InitialData(tx, tu, tv, Preset.TABLE)
        init.validate(kind)
        if abs(init.s0 - s0) > 1e-12 * max(1.0, s0):
            raise ConfigError(f"table domain [0, {init.s0}] does not match s0={s0}")
        return init
    au, av = spec.amplitude_u, spec.amplitude_v
    if au <= 0.0 or av <= 0.0:
        raise ConfigError("preset amplitudes must be positive")
    if preset is Preset.COSINE_BUMP:
        shape = np.cos(0.5 * math.pi * x / s0)
    else:
        shape = np.sin(math.pi * x / s0)
    shape[-1] = 0.0  # exact zero at the front regardless of roundoff
    if preset is Preset.SINE_BUMP:
        shape[0] = 0.0
    init = InitialData(x, au * shape, av * shape, preset, au, av)
    init.validate(kind)
    return init


def a_priori_bound(init: InitialData) -> float:
    """Ceiling M = max(1, sup u0, sup v0) for both densities.

    Comparison with the scalar logistic flow u' = u(1-u) shows values
    above 1 decay, so profiles never exceed this M.  It is monitored at
    runtime (with EPS_SCHEME slack), never used to clamp.
    """
    return max(1.0, init.sup_u, init.sup_v)
