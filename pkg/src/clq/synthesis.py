"""Feedback-law assembly, closed-loop simulation, and value/dual evaluation.

The feedback gain blows up at the terminal time, so the loop is integrated to
a standoff before it and the remaining displacement is closed with the
minimum-energy steering control on the final sliver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from .controllability import min_energy_steering
from .errors import IntegratorFailure, StandoffMiss
from .model import (LambdaWeights, ProblemSpec, Trajectory, eval_functional)
from .options import DEFAULTS, SolverOptions
from .riccati import RiccatiBundle, solve_bundle


@dataclass
class FeedbackLaw:
    """State-plus-target feedback law at a fixed multiplier vector."""

    spec: ProblemSpec
    lam: LambdaWeights
    bundle: RiccatiBundle
    y: np.ndarray

    @property
    def eps_T(self) -> float:
        return self.bundle.eps_T

    def control(self, s: float, x: np.ndarray) -> np.ndarray:
        B = self.spec.B(s)
        R = np.atleast_2d(self.bundle.Rlam(s))
        eta = self.bundle.eta(s, self.y) if np.any(self.y) else np.zeros(self.spec.n)
        return -np.linalg.solve(R, B.T @ (self.bundle.P(s) @ x + eta))


def build_feedback(spec: ProblemSpec, lam: LambdaWeights,
                   opts: SolverOptions = DEFAULTS,
                   bundle: Optional[RiccatiBundle] = None) -> FeedbackLaw:
    if bundle is None:
        bundle = solve_bundle(spec, lam, opts,
                              need_flows=bool(np.any(spec.y)), need_pi=False)
    return FeedbackLaw(spec, lam, bundle, spec.y)


def value_function(spec: ProblemSpec, lam: LambdaWeights,
                   opts: SolverOptions = DEFAULTS,
                   bundle: Optional[RiccatiBundle] = None) -> float:
    """Optimal value of the multiplier-weighted steering problem.

    Three-term quadratic form in (x, y); the cross term uses a linear solve
    against the flow at the initial time.
    """
    x, y = spec.x, spec.y
    has_x, has_y = bool(np.any(x)), bool(np.any(y))
    if bundle is None:
        bundle = solve_bundle(spec, lam, opts,
                              need_flows=has_x and has_y, need_pi=has_y)
    val = 0.0
    if has_x:
        val += float(x @ bundle.P(spec.t0) @ x)
    if has_x and has_y:
        val -= 2.0 * float((bundle.Psi_T() @ np.linalg.solve(bundle.Phi(spec.t0), x)) @ y)
    if has_y:
        val += float(y @ bundle.Pi(spec.T) @ y)
    return val


def dual_value(spec: ProblemSpec, lam: LambdaWeights,
               opts: SolverOptions = DEFAULTS,
               bundle: Optional[RiccatiBundle] = None) -> float:
    """Weighted value minus the budget pairing; the dual objective at lam."""
    base = value_function(spec, lam, opts, bundle)
    if spec.k == 0:
        return base
    return base - float(lam.lam @ spec.bounds)


def simulate_closed_loop(spec: ProblemSpec, law: FeedbackLaw,
                         opts: SolverOptions = DEFAULTS,
                         check_miss: bool = True) -> Trajectory:
    """Integrate the closed loop to the standoff, then close the gap.

    The residual displacement over the final sliver is steered out with the
    Gramian-based minimum-energy correction; its energy is included in the
    evaluated functionals.
    """
    bundle = law.bundle
    t0, T = spec.t0, spec.T
    t_stand = T - bundle.eps_T
    has_y = bool(np.any(law.y))
    if has_y:
        psi_T_y = bundle.Psi_T().T @ law.y

    def u_of(s, x):
        B = spec.B(s)
        R = np.atleast_2d(bundle.Rlam(s))
        v = bundle.P(s) @ x
        if has_y:
            v = v - np.linalg.solve(bundle.Phi(s).T, psi_T_y)
        return -np.linalg.solve(R, B.T @ v)

    def rhs(s, x):
        return spec.A(s) @ x + spec.B(s) @ u_of(s, x)

    sol = solve_ivp(rhs, (t0, t_stand), spec.x, method="RK45",
                    rtol=opts.rtol, atol=opts.atol, dense_output=True)
    if not sol.success:
        raise IntegratorFailure(sol.message)

    ts = np.linspace(t0, t_stand, opts.n_samples)
    X = sol.sol(ts).T
    U = np.array([u_of(s, x) for s, x in zip(ts, X)]).reshape(ts.size, spec.m)

    ts2, X2, U2 = min_energy_steering(spec, t_stand, T, X[-1], law.y, opts)
    times = np.concatenate([ts, ts2[1:]])
    states = np.vstack([X, X2[1:]])
    controls = np.vstack([U, U2[1:]])

    miss = float(np.linalg.norm(states[-1] - law.y))
    traj = Trajectory(times, states, controls, terminal_miss=miss)
    funs = np.array([eval_functional(f, traj)
                     for f in (spec.cost,) + spec.constraints])
    traj = Trajectory(times, states, controls, terminal_miss=miss,
                      functionals=funs)
    if check_miss and miss > opts.miss_tol(float(np.linalg.norm(law.y))):
        raise StandoffMiss(f"terminal miss {miss:.3e} exceeds tolerance")
    return traj


def cost_under_lambda(spec: ProblemSpec, lam: LambdaWeights,
                      traj: Trajectory) -> float:
    """Weighted cost of a trajectory with populated functional values."""
    if traj.functionals is None:
        raise ValueError("trajectory functionals not populated")
    total = float(traj.functionals[0])
    if spec.k:
        total += float(lam.lam @ traj.functionals[1:])
    return total


def state_via_flows(bundle: RiccatiBundle, x: np.ndarray, y: np.ndarray,
                    s: float, n_quad: int = 2001) -> np.ndarray:
    """Closed-form state through the flow pair; cross-check for the simulator.

    Only meaningful where the flow is well-conditioned (away from the
    terminal time).
    """
    spec = bundle.spec
    t0 = spec.t0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    part = np.zeros(spec.n)
    if np.any(y):
        psi_T_y = bundle.Psi_T().T @ y
        rs = np.linspace(t0, s, n_quad)
        vals = np.empty((n_quad, spec.n))
        for j, r in enumerate(rs):
            B = spec.B(r)
            R = np.atleast_2d(bundle.Rlam(r))
            eta = -np.linalg.solve(bundle.Phi(r).T, psi_T_y)
            forcing = -B @ np.linalg.solve(R, B.T @ eta)
            vals[j] = np.linalg.solve(bundle.Phi(r), forcing)
        part = trapezoid(vals, rs, axis=0)
    return bundle.Phi(s) @ (np.linalg.solve(bundle.Phi(t0), x) + part)
