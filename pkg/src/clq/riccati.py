"""Singular Riccati pair and auxiliary flows.

The endpoint blow-up is never integrated directly: the inverse-Riccati
variable has the regular boundary value 0 at the endpoint, is integrated
backward, and is inverted away from a terminal standoff.  The second singular
solution (blow-up at the initial time) comes from the same machinery applied
to the time-reversed system.  A penalized family with large finite terminal
weight provides an independent convergence oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (IllConditioned, IntegratorFailure, NonPositiveSigma,
                     StandoffViolation)
from .model import LambdaWeights, ProblemSpec, TimeGridMatrixFn, combine_weights
from .options import DEFAULTS, SolverOptions

SIGMA_NEG_EIG_TOL = -1e-10


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _spd_inverse(S: np.ndarray, cond_max: float) -> np.ndarray:
    """Symmetric inverse via eigendecomposition with a conditioning guard."""
    w, V = np.linalg.eigh(_sym(S))
    if w[0] <= 0 or w[-1] / w[0] > cond_max:
        raise IllConditioned(
            f"matrix inversion blocked: eigs in [{w[0]:.3e}, {w[-1]:.3e}]")
    return _sym((V / w) @ V.T)


def _solve_sigma_ode(Afn, Bfn, Qfn, Rfn, t_lo: float, t_hi: float,
                     rtol: float, atol: float):
    """Backward integration of the inverse-Riccati equation from zero at t_hi."""
    n = np.atleast_2d(Afn(t_lo)).shape[0]

    def rhs(s, z):
        S = z.reshape(n, n)
        A = Afn(s)
        B = np.atleast_2d(Bfn(s))
        Q = Qfn(s)
        R = np.atleast_2d(Rfn(s))
        BRB = B @ np.linalg.solve(R, B.T)
        dS = A @ S + S @ A.T + S @ Q @ S - BRB
        return dS.ravel()

    sol = solve_ivp(rhs, (t_hi, t_lo), np.zeros(n * n), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    # positivity audit at the accepted steps
    for j in range(sol.t.size):
        S = _sym(sol.y[:, j].reshape(n, n))
        if np.linalg.eigvalsh(S)[0] < SIGMA_NEG_EIG_TOL:
            raise NonPositiveSigma(
                f"inverse-Riccati solution lost psd at s={sol.t[j]:.6g}")
    return sol.sol, n


@dataclass
class RiccatiBundle:
    """Dense solutions for a fixed multiplier vector.

    Holds the inverse-Riccati solution on [t0, T], the two forward flows, and
    (optionally) the time-reversed singular solution.  Immutable in practice;
    consumers only call the evaluators.
    """

    spec: ProblemSpec
    lam: LambdaWeights
    Qlam: TimeGridMatrixFn
    Rlam: TimeGridMatrixFn
    eps_T: float
    opts: SolverOptions
    _sigma_sol: Callable = field(repr=False)
    _t_phi_end: float = field(default=np.nan)
    _flow_sol: Optional[Callable] = field(default=None, repr=False)
    _psi_T: Optional[np.ndarray] = field(default=None, repr=False)
    _pi_sigma_sol: Optional[Callable] = field(default=None, repr=False)

    @property
    def t0(self) -> float:
        return self.spec.t0

    @property
    def T(self) -> float:
        return self.spec.T

    def Sigma(self, s: float) -> np.ndarray:
        n = self.spec.n
        if s >= self.T:
            return np.zeros((n, n))
        return _sym(self._sigma_sol(s).reshape(n, n))

    def P(self, s: float) -> np.ndarray:
        return _spd_inverse(self.Sigma(s), self.opts.cond_max)

    def gain(self, s: float) -> np.ndarray:
        """Feedback gain R(lam,s)^{-1} B(s)^T P(s)."""
        B = self.spec.B(s)
        return np.linalg.solve(np.atleast_2d(self.Rlam(s)), B.T @ self.P(s))

    def Phi(self, s: float) -> np.ndarray:
        n = self.spec.n
        s = min(s, self._t_phi_end)
        return self._flow_sol(s)[: n * n].reshape(n, n)

    def Psi(self, s: float) -> np.ndarray:
        n = self.spec.n
        s = min(s, self._t_phi_end)
        return self._flow_sol(s)[n * n:].reshape(n, n)

    def Psi_T(self) -> np.ndarray:
        # the flow integration stops a hair before T; over that sliver the
        # companion equation is dominated by its linear part (Phi is already
        # negligible), so close the gap with a matrix exponential
        from scipy.linalg import expm
        eps = self.T - self._t_phi_end
        return expm(-self.spec.A(self.T).T * eps) @ self.Psi(self._t_phi_end)

    def Pi(self, s: float) -> np.ndarray:
        """Time-reversed singular solution; defined for s > t0."""
        n = self.spec.n
        tau = self.T + self.t0 - s
        S = _sym(self._pi_sigma_sol(tau).reshape(n, n))
        return _spd_inverse(S, self.opts.cond_max)

    def eta(self, s: float, y: np.ndarray) -> np.ndarray:
        """Target-feedback offset, via a linear solve against the flow."""
        return -np.linalg.solve(self.Phi(s).T, self.Psi_T().T @ np.asarray(y, float))


def solve_sigma(spec: ProblemSpec, lam: LambdaWeights,
                opts: SolverOptions = DEFAULTS) -> RiccatiBundle:
    """Solve the inverse-Riccati equation backward from its zero terminal value.

    Returns a bundle without flows; use :func:`solve_flows` / :func:`solve_Pi`
    to populate them, or :func:`solve_bundle` for everything at once.
    """
    Qlam, Rlam = combine_weights(spec, lam)
    sol, _ = _solve_sigma_ode(spec.A, spec.B, Qlam, Rlam, 0.0, spec.T,
                              opts.rtol, opts.atol)
    return RiccatiBundle(spec, lam, Qlam, Rlam,
                         eps_T=opts.eps_T(spec.t0, spec.T), opts=opts,
                         _sigma_sol=sol)


def recover_P(bundle: RiccatiBundle, s: float,
              eps_T: Optional[float] = None) -> np.ndarray:
    """P(s) as the symmetric positive-definite inverse of the dense solution.

    Refuses queries inside the terminal standoff, where the inverse is not
    trustworthy.
    """
    eps = bundle.eps_T if eps_T is None else eps_T
    if s > bundle.T - eps:
        raise StandoffViolation(
            f"s={s:g} is inside the terminal standoff (T - eps_T = {bundle.T - eps:g})")
    return bundle.P(s)


def solve_flows(bundle: RiccatiBundle) -> RiccatiBundle:
    """Forward integration of the closed-loop flow and its adjoint companion.

    The flow decays to zero at the terminal time; integration stops a hair
    before the blow-up and the end value stands in for the limit.
    """
    spec, opts = bundle.spec, bundle.opts
    n = spec.n
    t_end = spec.T - opts.eps_phi_frac * (spec.T - 0.0)

    def rhs(s, z):
        Phi = z[: n * n].reshape(n, n)
        Psi = z[n * n:].reshape(n, n)
        A = spec.A(s)
        Q = bundle.Qlam(s)
        closed = A - spec.B(s) @ bundle.gain(s)
        return np.concatenate([(closed @ Phi).ravel(),
                               (-A.T @ Psi - Q @ Phi).ravel()])

    P0 = bundle.P(0.0)
    z0 = np.concatenate([np.eye(n).ravel(), P0.ravel()])
    sol = solve_ivp(rhs, (0.0, t_end), z0, method="RK45",
                    rtol=opts.rtol, atol=opts.atol, dense_output=True)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    bundle._flow_sol = sol.sol
    bundle._t_phi_end = t_end
    return bundle


def solve_Pi(bundle: RiccatiBundle) -> RiccatiBundle:
    """Singular solution blowing up at the initial time, via time reversal."""
    spec, opts = bundle.spec, bundle.opts
    t0, T = spec.t0, spec.T

    def rev(fn, sign=1.0):
        return lambda s: sign * fn(T + t0 - s)

    sol, _ = _solve_sigma_ode(rev(spec.A, -1.0), rev(spec.B, -1.0),
                              rev(bundle.Qlam), rev(bundle.Rlam),
                              t0, T, opts.rtol, opts.atol)
    bundle._pi_sigma_sol = sol
    return bundle


def solve_bundle(spec: ProblemSpec, lam: LambdaWeights,
                 opts: SolverOptions = DEFAULTS,
                 need_flows: bool = True, need_pi: bool = True) -> RiccatiBundle:
    bundle = solve_sigma(spec, lam, opts)
    if need_flows:
        solve_flows(bundle)
    if need_pi:
        solve_Pi(bundle)
    return bundle


def eta_profile(bundle: RiccatiBundle, y: np.ndarray) -> Callable[[float], np.ndarray]:
    """Dense target-feedback offset on [0, T - eps_T]."""
    y = np.asarray(y, dtype=float)
    psi_T_y = bundle.Psi_T().T @ y

    def eta(s: float) -> np.ndarray:
        return -np.linalg.solve(bundle.Phi(s).T, psi_T_y)

    return eta


@dataclass
class PenalizedBundle:
    """Regular Riccati solution with finite terminal weight i, plus its
    affine companion and the quadrature term of the value representation."""

    spec: ProblemSpec
    weight: float
    y: np.ndarray
    opts: SolverOptions
    Qlam: TimeGridMatrixFn
    Rlam: TimeGridMatrixFn
    _p_sol: Callable = field(repr=False)
    _eta_sol: Callable = field(repr=False)
    _phi_sol: Optional[Callable] = field(default=None, repr=False)

    def P_i(self, s: float) -> np.ndarray:
        n = self.spec.n
        if s >= self.spec.T:
            return self.weight * np.eye(n)
        return _sym(self._p_sol(s).reshape(n, n))

    def eta_i(self, s: float) -> np.ndarray:
        n = self.spec.n
        if s >= self.spec.T:
            return -self.weight * self.y
        return self._eta_sol(s)[:n]

    def _quad(self, s: float) -> float:
        # integral from s to T of <R^{-1} B^T eta, B^T eta>
        n = self.spec.n
        return 0.0 if s >= self.spec.T else float(self._eta_sol(s)[n])

    def value(self, t: float, x: np.ndarray) -> float:
        """Penalized value at (t, x) for the stored target."""
        x = np.asarray(x, dtype=float)
        return float(x @ self.P_i(t) @ x + 2.0 * self.eta_i(t) @ x
                     + self.weight * float(self.y @ self.y) - self._quad(t))

    def Phi_i(self, s: float) -> np.ndarray:
        if self._phi_sol is None:
            self._solve_phi()
        n = self.spec.n
        return self._phi_sol(s).reshape(n, n)

    def _solve_phi(self):
        spec, opts = self.spec, self.opts
        n = spec.n

        def gain(s):
            B = spec.B(s)
            return np.linalg.solve(np.atleast_2d(self.Rlam(s)), B.T @ self.P_i(s))

        def rhs(s, z):
            Phi = z.reshape(n, n)
            closed = spec.A(s) - spec.B(s) @ gain(s)
            return (closed @ Phi).ravel()

        sol = solve_ivp(rhs, (0.0, spec.T), np.eye(n).ravel(), method="RK45",
                        rtol=opts.rtol, atol=opts.atol, dense_output=True)
        if not sol.success:
            raise IntegratorFailure(sol.message)
        self._phi_sol = sol.sol


def solve_penalized(spec: ProblemSpec, lam: LambdaWeights, weight: float,
                    y: np.ndarray | None = None,
                    opts: SolverOptions = DEFAULTS) -> PenalizedBundle:
    """Solve the terminal-penalty approximation with penalty weight >= 1.

    The Riccati equation here is regular (finite terminal value), so it is
    integrated directly; the affine companion and the value-representation
    quadrature ride along backward.
    """
    if weight < 1:
        raise ValueError("penalty weight must be >= 1")
    y = spec.y if y is None else np.asarray(y, dtype=float)
    Qlam, Rlam = combine_weights(spec, lam)
    n = spec.n

    def rhs_p(s, z):
        P = z.reshape(n, n)
        A = spec.A(s)
        B = spec.B(s)
        R = np.atleast_2d(Rlam(s))
        dP = -(P @ A + A.T @ P + Qlam(s) - P @ B @ np.linalg.solve(R, B.T @ P))
        return dP.ravel()

    sol_p = solve_ivp(rhs_p, (spec.T, 0.0), (weight * np.eye(n)).ravel(),
                      method="RK45", rtol=opts.rtol, atol=opts.atol,
                      dense_output=True)
    if not sol_p.success:
        raise IntegratorFailure(sol_p.message)

    def p_at(s):
        return _sym(sol_p.sol(s).reshape(n, n))

    def rhs_eta(s, z):
        eta = z[:n]
        A = spec.A(s)
        B = spec.B(s)
        R = np.atleast_2d(Rlam(s))
        closed = A - B @ np.linalg.solve(R, B.T @ p_at(s))
        Bt_eta = B.T @ eta
        dq = -float(np.linalg.solve(R, Bt_eta) @ Bt_eta)
        return np.concatenate([-closed.T @ eta, [dq]])

    sol_eta = solve_ivp(rhs_eta, (spec.T, 0.0),
                        np.concatenate([-weight * y, [0.0]]),
                        method="RK45", rtol=opts.rtol, atol=opts.atol,
                        dense_output=True)
    if not sol_eta.success:
        raise IntegratorFailure(sol_eta.message)

    return PenalizedBundle(spec, float(weight), y, opts, Qlam, Rlam,
                           _p_sol=sol_p.sol, _eta_sol=sol_eta.sol)


PENALTY_LADDER = (1.0, 10.0, 100.0, 1000.0)
