"""Numerical laboratory for 1-D free-boundary Lotka-Volterra competition.

Two species spread into [0, s(t)] behind a front obeying a Stefan-type
rule; the package simulates both the no-flux (NFB) and Dirichlet (DFB)
variants, classifies runs as spreading or vanishing, brackets the
critical expansion coefficient, builds steady-state barrier profiles,
and certifies small-coefficient vanishing with an explicit supersolution.
"""

__version__ = "0.1.0"

from .core import (
    EPS_SCHEME,
    InitSpec,
    InitialData,
    ModelParams,
    Preset,
    ProblemKind,
    Regime,
    a_priori_bound,
    classify_regime,
    coexistence_limit,
    lambda_threshold,
    make_initial_data,
)
from .solver import (
    GridSpec,
    RunRecord,
    SimState,
    Snapshot,
    boundary_flux,
    extend_run,
    front_speed,
    load_record,
    simulate,
    transformed_step,
    write_record,
)

__all__ = [
    "EPS_SCHEME",
    "GridSpec",
    "InitSpec",
    "InitialData",
    "ModelParams",
    "Preset",
    "ProblemKind",
    "Regime",
    "RunRecord",
    "SimState",
    "Snapshot",
    "a_priori_bound",
    "boundary_flux",
    "classify_regime",
    "coexistence_limit",
    "extend_run",
    "front_speed",
    "lambda_threshold",
    "load_record",
    "make_initial_data",
    "simulate",
    "transformed_step",
    "write_record",
]
