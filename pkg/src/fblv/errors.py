"""Exception hierarchy shared by all fblv modules.

The three branches map onto the CLI exit-code scheme: configuration
problems (exit 3), numerical failures during a run (exit 2), and
"no result" outcomes such as a missing bisection bracket (exit 4).
"""

from __future__ import annotations


class FblvError(Exception):
    """Base class for all package errors."""


class ConfigError(FblvError):
    """Invalid configuration or precondition violation detectable before compute."""


class SolverError(FblvError):
    """Numerical failure inside a solver."""

    def __init__(self, message: str, *, t: float | None = None, step: int | None = None):
        if t is not None:
            message = f"{message} (t={t:.6g}, step={step})"
        super().__init__(message)
        self.t = t
        self.step = step
        #: partial RunRecord attached by ``simulate`` for post-mortem, if any
        self.record = None


class BlowUpError(SolverError):
    """Non-finite values appeared in a profile."""


class PositivityError(SolverError):
    """A profile undershot below the roundoff tolerance."""


class FrontRetreatError(SolverError):
    """The Stefan rule produced a negative front speed."""


class StabilityError(SolverError):
    """The time step violates the advection stability constraint."""


class BoundCeilingError(SolverError):
    """A monitored a-priori ceiling (profile sup or front speed) was exceeded."""


class SteadySolveError(SolverError):
    """Damped Newton failed to converge on a steady-state boundary value problem."""

    def __init__(self, message: str, *, residual: float | None = None, iterations: int | None = None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e} after {iterations} iterations)"
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NoResultError(FblvError):
    """The requested computation has no valid result."""


class NoThresholdError(NoResultError):
    """s0 >= Lambda: every expansion coefficient spreads, no threshold exists."""


class NoBracketError(NoResultError):
    """The supplied mu interval does not bracket a vanishing/spreading flip."""


class NonMonotoneError(NoResultError):
    """Bisection observed spreading below a mu that vanished; reported, never masked."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class UndeterminedError(NoResultError):
    """A probe stayed Undetermined after exhausting the t_max escalation budget."""


class NoWitnessError(NoResultError):
    """The supersolution lattice search found no certifiable tuple."""


class UncoveredRegimeError(NoResultError):
    """Long-time limit requested in the h>=1, k>=1 regime, which has no proven limit."""
