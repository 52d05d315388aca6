"""Exception hierarchy; every error carries a short category used by the CLI."""


class GibbsError(Exception):
    category = "error"


class ModelError(GibbsError, ValueError):
    """Malformed shift, potential table or model file."""

    category = "model"


class AdmissibilityError(GibbsError, ValueError):
    """A word uses a forbidden transition or an out-of-range symbol."""

    category = "admissibility"


class DimensionError(GibbsError, ValueError):
    category = "dimension"


class ConvergenceError(GibbsError, RuntimeError):
    category = "convergence"


class InfeasibleError(GibbsError, RuntimeError):
    """The constrained parameter set is empty for the observed word.

    ``closest`` holds the candidate with the smallest constraint violation.
    """

    category = "infeasible"

    def __init__(self, message, closest=None, violation=None):
        super().__init__(message)
        self.closest = closest
        self.violation = violation


class DegenerateModelError(GibbsError, ValueError):
    """Directions are not independent modulo coboundaries and constants."""

    category = "degenerate"
