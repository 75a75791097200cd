"""Constrained LQ steering: fixed terminal state, integral quadratic budgets.

The library solves min-cost steering problems whose terminal state is pinned
exactly and whose running quadratic functionals are held under budgets.  The
main entry points are :func:`maximize_dual` (full constrained solve),
:func:`value_function` / :func:`build_feedback` (fixed-multiplier problems),
and the :mod:`clq.oracle` direct-transcription cross-check.
"""

from .controllability import (FundamentalSolution, Gramian,
                              controllability_gramian, kalman_rank,
                              min_energy_steering, steering_control)
from .dual import (CertReport, DualResult, certify, dual_gradient,
                   maximize_dual)
from .errors import (ClqError, DimensionMismatch, IllConditioned,
                     InfeasibleQP, IntegratorFailure, MaxIterExceeded,
                     NonPositiveSigma, ProblemFileError, SingularGramian,
                     SingularKKT, StandoffMiss, StandoffViolation,
                     UnboundedDual)
from .model import (LambdaWeights, ProblemSpec, QuadraticFunctional,
                    TimeGridMatrixFn, Trajectory, ValidationReport,
                    combine_weights, eval_functional, validate_spec)
from .options import DEFAULTS, SolverOptions
from .problem_io import dump_problem, load_problem, parse_problem
from .riccati import (PENALTY_LADDER, PenalizedBundle, RiccatiBundle,
                      recover_P, solve_bundle, solve_flows, solve_penalized,
                      solve_Pi, solve_sigma)
from .synthesis import (FeedbackLaw, build_feedback, dual_value,
                        simulate_closed_loop, value_function)

__version__ = "0.1.0"

__all__ = [
    "CertReport", "ClqError", "DEFAULTS", "DimensionMismatch", "DualResult",
    "FeedbackLaw", "FundamentalSolution", "Gramian", "IllConditioned",
    "InfeasibleQP", "IntegratorFailure", "LambdaWeights", "MaxIterExceeded",
    "NonPositiveSigma", "PENALTY_LADDER", "PenalizedBundle", "ProblemFileError",
    "ProblemSpec", "QuadraticFunctional", "RiccatiBundle", "SingularGramian",
    "SingularKKT", "SolverOptions", "StandoffMiss", "StandoffViolation",
    "TimeGridMatrixFn", "Trajectory", "UnboundedDual", "ValidationReport",
    "build_feedback", "certify", "combine_weights", "controllability_gramian",
    "dual_gradient", "dual_value", "dump_problem", "eval_functional",
    "kalman_rank", "load_problem", "maximize_dual", "min_energy_steering",
    "parse_problem", "recover_P", "simulate_closed_loop", "solve_Pi",
    "solve_bundle", "solve_flows", "solve_penalized", "solve_sigma",
    "steering_control", "validate_spec", "value_function",
]
