"""Exception hierarchy for the clq solver."""


class ClqError(Exception):
    """Base class for all solver errors."""


class DimensionMismatch(ClqError):
    """Operands have incompatible shapes."""


class IntegratorFailure(ClqError):
    """The adaptive ODE integrator failed to reach the end of the interval."""


class SingularGramian(ClqError):
    """Controllability Gramian is numerically singular on the requested interval."""


class NonPositiveSigma(ClqError):
    """Inverse-Riccati solution lost positive semidefiniteness (controllability
    assumption violated or tolerances too loose)."""


class StandoffViolation(ClqError):
    """Query time falls inside the terminal standoff where the Riccati solution
    may not be inverted."""


class IllConditioned(ClqError):
    """Condition estimate of a matrix exceeds the configured cap."""


class StandoffMiss(ClqError):
    """Closed-loop terminal state misses the target by more than the tolerance."""


class MaxIterExceeded(ClqError):
    """Dual ascent did not converge within the iteration budget."""


class UnboundedDual(ClqError):
    """Dual function keeps increasing along a ray; no strictly feasible control
    exists (Slater failure)."""


class SingularKKT(ClqError):
    """KKT system of the transcribed problem is singular (terminal map row-deficient)."""


class InfeasibleQP(ClqError):
    """No gridded control satisfies the terminal equality within the budgets."""


class ProblemFileError(ClqError):
    """Problem file failed to parse or validate."""
