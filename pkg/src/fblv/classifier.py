"""Spreading/vanishing verdicts and bisection for the critical coefficient.

A front that ever exceeds the threshold length Lambda certifies
spreading (a bounded front would have to stay below Lambda).  Vanishing
has no finite-time certificate; its signature is a stalled front below
Lambda together with collapsed populations, and is labelled heuristic.

The critical expansion coefficient is reported as a bracket [mu_lo,
mu_hi], never a single value: monotonicity of the outcome in mu is
assumed by bisection but instrumented, and any observed violation is
surfaced instead of being masked.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    InitSpec,
    InitialData,
    ModelParams,
    ProblemKind,
    lambda_threshold,
    make_initial_data,
)
from .errors import (
    ConfigError,
    FblvError,
    NoBracketError,
    NonMonotoneError,
    NoThresholdError,
    UndeterminedError,
)
from .solver import GridSpec, RunRecord, simulate, suggest_dt

DEFAULT_TOL_VANISH = 1e-3
#: default front-stall tolerance as a fraction of Lambda
STALL_FRACTION = 1e-4


class Verdict(enum.Enum):
    SPREADING_CERTIFIED = "SpreadingCertified"
    VANISHING_HEURISTIC = "VanishingHeuristic"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Evidence:
    final_s: float
    final_sup_u: float
    final_sup_v: float
    final_s_prime: float


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    certificate_time: float | None
    evidence: Evidence

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "certificate_time": self.certificate_time,
            "evidence": vars(self.evidence).copy(),
        }


def classify_run(record: RunRecord, lam: float,
                 tol_vanish: float = DEFAULT_TOL_VANISH,
                 tol_stall: float | None = None) -> Classification:
    """Decide the verdict for one recorded run.

    SpreadingCertified fires at the first sample with s > lam.
    VanishingHeuristic requires, jointly: final s below lam, final
    sup u and sup v below ``tol_vanish``, and front growth below
    ``tol_stall`` (default 1e-4 lam) over the last 20% of the run.
    Anything else is Undetermined.
    """
    if not lam > 0.0:
        raise ConfigError(f"threshold length must be positive, got {lam}")
    if tol_stall is None:
        tol_stall = STALL_FRACTION * lam

    evidence = Evidence(
        final_s=float(record.s[-1]),
        final_sup_u=float(record.sup_u[-1]),
        final_sup_v=float(record.sup_v[-1]),
        final_s_prime=float(record.s_prime[-1]),
    )
    above = record.s > lam
    if above.any():
        first = int(np.argmax(above))
        return Classification(Verdict.SPREADING_CERTIFIED, float(record.t[first]), evidence)

    t_final = float(record.t[-1])
    i80 = int(np.searchsorted(record.t, 0.8 * t_final, side="left"))
    growth = float(record.s[-1] - record.s[i80])
    if (evidence.final_s < lam
            and evidence.final_sup_u < tol_vanish
            and evidence.final_sup_v < tol_vanish
            and growth < tol_stall):
        return Classification(Verdict.VANISHING_HEURISTIC, None, evidence)
    return Classification(Verdict.UNDETERMINED, None, evidence)


@dataclass(frozen=True)
class ThresholdBracket:
    """Numerical surrogate for the critical-coefficient interval."""

    mu_lo: float
    mu_hi: float
    history: tuple  # of (mu, Verdict)

    def __post_init__(self):
        if not self.mu_lo < self.mu_hi:
            raise ConfigError("bracket requires mu_lo < mu_hi")
        if any(v is Verdict.UNDETERMINED for _, v in self.history):
            raise ConfigError("bracket history may not contain Undetermined probes")

    @property
    def width(self) -> float:
        return self.mu_hi - self.mu_lo

    @property
    def rel_width(self) -> float:
        return self.width / self.mu_hi

    def as_dict(self) -> dict:
        return {
            "mu_lo": self.mu_lo,
            "mu_hi": self.mu_hi,
            "width": self.width,
            "history": [{"mu": m, "verdict": v.value} for m, v in self.history],
        }


def write_bracket_json(bracket: ThresholdBracket, path) -> None:
    with open(path, "w") as f:
        json.dump(bracket.as_dict(), f, indent=2)
        f.write("\n")


def _check_monotone(history) -> None:
    spreads = [m for m, v in history if v is Verdict.SPREADING_CERTIFIED]
    vanishes = [m for m, v in history if v is Verdict.VANISHING_HEURISTIC]
    if spreads and vanishes and min(spreads) < max(vanishes):
        raise NonMonotoneError(
            f"non-monotone verdicts: spreading at mu={min(spreads)} "
            f"below vanishing at mu={max(vanishes)}", history)


def determine_verdict(params: ModelParams, kind: ProblemKind, init: InitialData,
                      grid: GridSpec, lam: float, *,
                      tol_vanish: float = DEFAULT_TOL_VANISH,
                      tol_stall: float | None = None,
                      max_escalations: int = 3) -> tuple[Verdict, float]:
    """Classify one parameter point, escalating t_max until decisive.

    Near-critical coefficients are genuinely slow: Undetermined runs are
    retried with doubled t_max, up to ``max_escalations`` times.  The
    time step is capped per point so that fast fronts stay within the
    advection constraint.  Returns (verdict, t_max that decided); raises
    after exhausting the escalation budget.
    """
    dt = suggest_dt(params, init, grid)
    verdict = Verdict.UNDETERMINED
    t_max = grid.t_max
    for _ in range(max_escalations + 1):
        probe_grid = GridSpec(grid.n_cells, dt, t_max, grid.snapshot_stride)
        record = simulate(params, kind, init, probe_grid, stop_when_s_exceeds=lam)
        verdict = classify_run(record, lam, tol_vanish, tol_stall).verdict
        if verdict is not Verdict.UNDETERMINED:
            return verdict, t_max
        t_max *= 2.0
    raise UndeterminedError(
        f"mu = {params.mu} stayed Undetermined up to t_max = {t_max / 2.0}")


def find_mu_star(params: ModelParams, kind: ProblemKind, init: InitialData | InitSpec,
                 grid: GridSpec, bracket0: tuple[float, float] = (1e-3, 1e2),
                 rel_tol: float = 0.05, *,
                 tol_vanish: float = DEFAULT_TOL_VANISH,
                 tol_stall: float | None = None,
                 max_escalations: int = 3,
                 probe_cache: dict | None = None,
                 on_probe=None) -> ThresholdBracket:
    """Bisect on mu until the bracket's relative width is at most rel_tol.

    ``params.mu`` is ignored; each probe replaces it.  Requires
    s0 < Lambda (otherwise every mu spreads and no threshold exists) and
    bracket endpoints classifying as (vanishing, spreading).  Probes that
    stay Undetermined double t_max, at most ``max_escalations`` times,
    then abort.  ``probe_cache`` (mu repr -> verdict name) lets an
    interrupted bisection resume without re-simulating; ``on_probe`` is
    called after every fresh probe.
    """
    kind = ProblemKind.parse(kind)
    lam = lambda_threshold(params, kind)
    if params.s0 >= lam:
        raise NoThresholdError(
            f"no threshold exists: s0 = {params.s0} >= Lambda = {lam:.6g}")
    mu_lo, mu_hi = float(bracket0[0]), float(bracket0[1])
    if not (0.0 < mu_lo < mu_hi):
        raise ConfigError(f"bracket0 must satisfy 0 < lo < hi, got {bracket0}")
    if not 0.0 < rel_tol < 1.0:
        raise ConfigError("rel_tol must be in (0, 1)")
    init_data = materialize_init(init, kind, params, grid)
    cache = probe_cache if probe_cache is not None else {}

    history: list[tuple[float, Verdict]] = []

    def probe(mu: float) -> Verdict:
        key = repr(mu)
        if key in cache:
            verdict = Verdict(cache[key])
        else:
            verdict, _ = determine_verdict(
                replace(params, mu=mu), kind, init_data, grid, lam,
                tol_vanish=tol_vanish, tol_stall=tol_stall,
                max_escalations=max_escalations)
            cache[key] = verdict.value
            if on_probe is not None:
                on_probe(mu, verdict)
        history.append((mu, verdict))
        _check_monotone(history)
        return verdict

    if probe(mu_lo) is not Verdict.VANISHING_HEURISTIC:
        raise NoBracketError(f"no bracket: mu_lo = {mu_lo} did not vanish")
    if probe(mu_hi) is not Verdict.SPREADING_CERTIFIED:
        raise NoBracketError(f"no bracket: mu_hi = {mu_hi} did not spread")

    while (mu_hi - mu_lo) / mu_hi > rel_tol:
        mid = 0.5 * (mu_lo + mu_hi)
        if probe(mid) is Verdict.SPREADING_CERTIFIED:
            mu_hi = mid
        else:
            mu_lo = mid
    return ThresholdBracket(mu_lo, mu_hi, tuple(history))


def materialize_init(init: InitialData | InitSpec, kind: ProblemKind,
                     params: ModelParams, grid: GridSpec) -> InitialData:
    """Turn an init description into sampled data on the run's grid."""
    if isinstance(init, InitialData):
        return init
    return make_initial_data(kind, params.s0, grid.n_cells, init)


@dataclass
class SweepRow:
    key: int
    params: ModelParams | None
    classification: Classification | None
    error: str | None


def _sweep_one(args) -> SweepRow:
    key, entry, base, kind, init, grid, tol_vanish, tol_stall, stop_early = args
    params = None
    try:
        if isinstance(entry, ModelParams):
            params = entry
        else:
            if base is None:
                raise ConfigError("dict plan entries require base params")
            params = replace(base, **entry)
        init_data = materialize_init(init, kind, params, grid)
        lam = lambda_threshold(params, kind)
        dt = suggest_dt(params, init_data, grid)
        row_grid = GridSpec(grid.n_cells, dt, grid.t_max, grid.snapshot_stride)
        record = simulate(params, kind, init_data, row_grid,
                          stop_when_s_exceeds=lam if stop_early else None)
        classification = classify_run(record, lam, tol_vanish, tol_stall)
        return SweepRow(key, params, classification, None)
    except FblvError as exc:
        return SweepRow(key, params, None, f"{type(exc).__name__}: {exc}")


def sweep(plan, kind: ProblemKind, init: InitialData | InitSpec, grid: GridSpec, *,
          base_params: ModelParams | None = None, jobs: int = 1,
          tol_vanish: float = DEFAULT_TOL_VANISH, tol_stall: float | None = None,
          stop_early: bool = True) -> list[SweepRow]:
    """Classify every plan entry; individual failures become per-row errors.

    Plan entries are ModelParams or dicts of field overrides applied to
    ``base_params``.  Rows are independent and run in up to ``jobs``
    processes; results come back in plan order regardless.
    """
    if not plan:
        raise ConfigError("sweep plan must be nonempty")
    kind = ProblemKind.parse(kind)
    tasks = [(i, entry, base_params, kind, init, grid, tol_vanish, tol_stall, stop_early)
             for i, entry in enumerate(plan)]
    if jobs <= 1:
        return [_sweep_one(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_one, tasks))


SWEEP_HEADER = "key,mu,k,h,r,D,rho,s0,verdict,cert_time,final_s,final_sup_u,final_sup_v"


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    def fmt(x) -> str:
        return "" if x is None else repr(float(x))

    with open(path, "w") as f:
        f.write(SWEEP_HEADER + "\n")
        for row in rows:
            p = row.params
            pcols = ([fmt(p.mu), fmt(p.k), fmt(p.h), fmt(p.r), fmt(p.D), fmt(p.rho), fmt(p.s0)]
                     if p is not None else [""] * 7)
            if row.classification is not None:
                c = row.classification
                tail = [c.verdict.value, fmt(c.certificate_time),
                        fmt(c.evidence.final_s), fmt(c.evidence.final_sup_u),
                        fmt(c.evidence.final_sup_v)]
            else:
                tail = [f"error:{row.error.split(':', 1)[0]}", "", "", "", ""]
            f.write(",".join([str(row.key)] + pcols + tail) + "\n")
