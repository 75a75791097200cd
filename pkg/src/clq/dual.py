"""Concave dual maximization over the nonnegative multiplier orthant.

The dual gradient uses the envelope identity: the i-th component is the i-th
functional value of the inner optimal control minus its budget.  A single
budget is maximized by golden-section on a bracketed interval; several use
projected gradient ascent with backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaxIterExceeded, UnboundedDual
from .model import LambdaWeights, ProblemSpec, Trajectory
from .options import DEFAULTS, SolverOptions
from .synthesis import (build_feedback, dual_value, simulate_closed_loop,
                        value_function)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
CS_TOL = 1e-3
FEAS_TOL = 1e-3


@dataclass
class TraceRow:
    iteration: int
    lam: np.ndarray
    phi: float
    grad_norm: float
    step: float


@dataclass
class DualResult:
    lam_star: LambdaWeights
    dual_value: float
    primal_traj: Trajectory
    slack: np.ndarray
    kkt_residual: float
    iterations: int
    trace: list[TraceRow] = field(default_factory=list)


def dual_gradient(spec: ProblemSpec, lam: LambdaWeights,
                  opts: SolverOptions = DEFAULTS,
                  traj: Trajectory | None = None) -> np.ndarray:
    """Envelope gradient: functional values of the inner optimum minus budgets."""
    if spec.k == 0:
        return np.zeros(0)
    if traj is None:
        law = build_feedback(spec, lam, opts)
        traj = simulate_closed_loop(spec, law, opts, check_miss=False)
    return np.asarray(traj.functionals[1:]) - spec.bounds


def _projected_grad_norm(lam: np.ndarray, grad: np.ndarray) -> float:
    proj = np.where(lam > 0, grad, np.maximum(grad, 0.0))
    return float(np.linalg.norm(proj))


def _phi(spec: ProblemSpec, lam: np.ndarray, opts: SolverOptions) -> float:
    return dual_value(spec, LambdaWeights(lam), opts)


def _finish(spec: ProblemSpec, lam: np.ndarray, phi_star: float,
            iters: int, trace: list[TraceRow],
            opts: SolverOptions) -> DualResult:
    weights = LambdaWeights(lam)
    law = build_feedback(spec, weights, opts)
    traj = simulate_closed_loop(spec, law, opts, check_miss=False)
    slack = (spec.bounds - np.asarray(traj.functionals[1:])
             if spec.k else np.zeros(0))
    grad = dual_gradient(spec, weights, opts, traj=traj)
    kkt = _projected_grad_norm(lam, grad) if spec.k else 0.0
    return DualResult(weights, phi_star, traj, slack, kkt, iters, trace)


def _maximize_scalar(spec: ProblemSpec, opts: SolverOptions,
                     tol: float, max_iter: int) -> DualResult:
    trace: list[TraceRow] = []
    iters = 0

    def phi(v: float) -> float:
        return _phi(spec, np.array([v]), opts)

    lo, hi = 0.0, 64.0
    f_lo = phi(lo)
    f_hi = phi(hi)
    trace.append(TraceRow(iters, np.array([lo]), f_lo, np.nan, hi - lo))
    # expand the bracket until the dual decreases at the right end
    while f_hi > f_lo:
        if hi > opts.dual_cap:
            raise UnboundedDual(
                f"dual keeps increasing past lambda = {hi:g}; "
                "no strictly feasible control")
        hi *= 2.0
        f_hi = phi(hi)
        iters += 1
        trace.append(TraceRow(iters, np.array([hi]), f_hi, np.nan, hi))
    # golden-section on [lo, hi]
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    f_c, f_d = phi(c), phi(d)
    width_tol = max(tol, 1e-5)
    while b - a > width_tol and iters < max_iter:
        if f_c >= f_d:
            b, d, f_d = d, c, f_c
            c = b - GOLDEN * (b - a)
            f_c = phi(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + GOLDEN * (b - a)
            f_d = phi(d)
        iters += 1
        best = c if f_c >= f_d else d
        trace.append(TraceRow(iters, np.array([best]), max(f_c, f_d),
                              np.nan, b - a))
    lam = np.array([0.5 * (a + b)])
    # boundary maximizer: clamp to zero when the maximum sits at the origin
    if lam[0] <= width_tol and phi(0.0) >= max(f_c, f_d) - 1e-12:
        lam = np.array([0.0])
    return _finish(spec, lam, phi(lam[0]), iters, trace, opts)


def _maximize_pga(spec: ProblemSpec, opts: SolverOptions, tol: float,
                  max_iter: int, lam0: np.ndarray) -> DualResult:
    trace: list[TraceRow] = []
    lam = np.maximum(np.asarray(lam0, dtype=float), 0.0)
    f = _phi(spec, lam, opts)
    for it in range(max_iter):
        grad = dual_gradient(spec, LambdaWeights(lam), opts)
        gnorm = _projected_grad_norm(lam, grad)
        trace.append(TraceRow(it, lam.copy(), f, gnorm, np.nan))
        if gnorm <= tol:
            return _finish(spec, lam, f, it, trace, opts)
        if np.linalg.norm(lam) > opts.dual_cap:
            raise UnboundedDual("multiplier magnitude exceeded the cap during ascent")
        step = 1.0 / (1.0 + np.linalg.norm(grad))
        while True:
            cand = np.maximum(lam + step * grad, 0.0)
            f_cand = _phi(spec, cand, opts)
            if f_cand >= f + ARMIJO_C * step * gnorm ** 2 or step < 1e-12:
                break
            step *= ARMIJO_SHRINK
        trace[-1].step = step
        lam, f = cand, f_cand
    raise MaxIterExceeded(f"no stationary point within {max_iter} iterations")


def maximize_dual(spec: ProblemSpec, opts: SolverOptions = DEFAULTS,
                  tol: float | None = None, max_iter: int | None = None,
                  lam0: np.ndarray | None = None) -> DualResult:
    """Maximize the dual objective over the nonnegative orthant.

    Golden-section for a single budget, projected gradient ascent with
    backtracking otherwise.  Raises UnboundedDual when the dual increases
    along a ray past the cap (no strictly feasible control).
    """
    tol = opts.dual_tol if tol is None else tol
    max_iter = opts.dual_max_iter if max_iter is None else max_iter
    if spec.k == 0:
        return _finish(spec, np.zeros(0), value_function(spec, LambdaWeights.zeros(0), opts),
                       0, [], opts)
    if spec.k == 1:
        return _maximize_scalar(spec, opts, tol, max_iter)
    lam0 = np.zeros(spec.k) if lam0 is None else lam0
    return _maximize_pga(spec, opts, tol, max_iter, lam0)


@dataclass(frozen=True)
class CertReport:
    feasibility_margin: np.ndarray   # c_i - J_i(u*), negative means violated
    cs_residual: np.ndarray          # |lam_i * slack_i|
    gap_proxy: float                 # |J_0(u*) - phi(lam*)|
    terminal_miss: float

    def ok(self, bounds: np.ndarray, gap_tol: float = 1e-2) -> bool:
        feas = np.all(self.feasibility_margin >= -FEAS_TOL * (1.0 + bounds)) \
            if self.feasibility_margin.size else True
        cs = np.all(self.cs_residual <= CS_TOL * (1.0 + bounds)) \
            if self.cs_residual.size else True
        return bool(feas and cs and self.gap_proxy <= gap_tol * (1.0 + abs(self.gap_proxy)))


def certify(result: DualResult, spec: ProblemSpec) -> CertReport:
    """Check the optimality conclusions: feasibility, complementary slackness,
    and the strong-duality gap proxy."""
    j0 = float(result.primal_traj.functionals[0])
    cs = np.abs(result.lam_star.lam * result.slack) if spec.k else np.zeros(0)
    return CertReport(
        feasibility_margin=result.slack,
        cs_residual=cs,
        gap_proxy=abs(j0 - result.dual_value),
        terminal_miss=result.primal_traj.terminal_miss,
    )
