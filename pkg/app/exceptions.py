"""
Error hierarchy for the micromaser toolkit.

Every domain failure carries a human-readable ``detail`` and the process exit
code the command line reports for it.
"""


class SimulationError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidNonlinearityError(SimulationError):
    """Nonlinearity function cannot be parsed or evaluated."""

    exit_code = 2


class IncompatibleKindsError(SimulationError):
    """Two ladder operators of different step were combined."""

    exit_code = 2


class ConfigError(SimulationError):
    """Experiment document violates an invariant."""

    exit_code = 2


class DivergentSeriesError(SimulationError):
    """Number-state series of a target state does not converge."""

    exit_code = 3


class InsufficientCutoffError(SimulationError):
    """Fock-space cutoff too small for the requested accuracy."""

    exit_code = 3


class SingularTransformError(SimulationError):
    """Phase-independent transform hit a vanishing sine factor."""

    exit_code = 3


class AsymptoticsUnavailableError(SimulationError):
    """Large-n behaviour of a tabulated nonlinearity is unknown."""

    exit_code = 3


class LeakageBudgetExceeded(SimulationError):
    """Probability lost past the cutoff exceeds the configured budget."""

    exit_code = 4


class CrossCheckMismatch(SimulationError):
    """Recursion and unitary evolution paths disagree."""

    exit_code = 4
