"""Exception hierarchy shared by the solvers and the command line."""


class TipBlockadeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TipBlockadeError, ValueError):
    """Invalid or unknown configuration key/value."""


class DimensionError(TipBlockadeError, ValueError):
    pass


class SolverError(TipBlockadeError):
    """A numerical solve failed; ``operation`` names the failing step."""

    operation = "solve"


class DegenerateSteadyState(SolverError):
    operation = "steady_state"


class NoConvergence(SolverError):
    operation = "steady_state"


class PropagationError(SolverError):
    operation = "time_evolve"


class ZeroPhotonNumber(SolverError):
    operation = "gn_zero"


class ResonantPole(SolverError):
    operation = "closed_form"


class IdealNotBlockading(SolverError):
    operation = "efficiency_ratio"


class NoSolution(TipBlockadeError):
    """A condition solver found no tip position satisfying its equation."""
