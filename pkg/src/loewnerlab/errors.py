"""Exception hierarchy shared by all solver layers.

Every error carries an ``exit_code`` so the CLI can map failure classes to
process exit codes without inspecting types downstream: 2 for malformed or
out-of-domain input, 3 for geometry violations (non-simple curves, segments
leaving the half-plane), 4 for non-convergence and refinement requests.
"""


class LoewnerError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class InputError(LoewnerError):
    """Malformed or inconsistent input data (files, grids, parameters)."""

    exit_code = 2


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class BranchCutError(DomainError):
    """Point lies on the branch cut of the square-root map."""


class GeometryError(LoewnerError):
    """Curve geometry violates a precondition (non-simple, wrong half-plane)."""

    exit_code = 3


class ConvergenceError(LoewnerError):
    """An iterative scheme failed to converge within its budget."""

    exit_code = 4


class RefinementRequiredError(ConvergenceError):
    """Input resolution is too coarse for a stable computation."""


class SurvivalError(ConvergenceError):
    """A point was swallowed by the hull before the requested time.

    Carries ``tau``, the estimated survival time.
    """

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class DiagnosticError(LoewnerError):
    """A consistency diagnostic failed; carries the offending sequence."""

    exit_code = 4

    def __init__(self, message, sequence=None):
        super().__init__(message)
        self.sequence = sequence
