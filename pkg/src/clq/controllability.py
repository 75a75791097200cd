"""Complete-controllability checks and minimum-energy two-point steering.

The Gramian criterion is the computable test for the controllability
hypothesis; the Kalman rank condition covers the time-invariant case.  The
explicit Gramian-based steering control doubles as the closure step for the
terminal standoff in the closed-loop simulator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegratorFailure, SingularGramian
from .model import ProblemSpec, Trajectory, eval_functional
from .options import DEFAULTS, SolverOptions

GRAM_SYM_TOL = 1e-10


def _run_ivp(rhs, t_span, y0, rtol, atol, dense_output=True):
    sol = solve_ivp(rhs, t_span, y0, method="RK45", rtol=rtol, atol=atol,
                    dense_output=dense_output)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    return sol


class FundamentalSolution:
    """Dense transition matrix of the drift and its inverse on [a, b].

    The inverse is obtained by integrating the adjoint equation alongside the
    forward one rather than by per-step inversion.
    """

    def __init__(self, spec: ProblemSpec, a: float, b: float,
                 rtol: float = DEFAULTS.rtol, atol: float = DEFAULTS.atol):
        n = spec.n
        self.n = n
        self.a, self.b = a, b
        eye = np.eye(n).ravel()

        def rhs(s, z):
            A = spec.A(s)
            M = z[:n * n].reshape(n, n)
            Minv = z[n * n:].reshape(n, n)
            return np.concatenate([(A @ M).ravel(), (-Minv @ A).ravel()])

        self._sol = _run_ivp(rhs, (a, b), np.concatenate([eye, eye]), rtol, atol).sol

    def phi(self, s: float) -> np.ndarray:
        return self._sol(s)[: self.n * self.n].reshape(self.n, self.n)

    def phi_inv(self, s: float) -> np.ndarray:
        return self._sol(s)[self.n * self.n:].reshape(self.n, self.n)


def fundamental_matrix(spec: ProblemSpec, s: float,
                       rtol: float = DEFAULTS.rtol, atol: float = DEFAULTS.atol
                       ) -> np.ndarray:
    """Transition matrix of the drift at time s, normalized to identity at 0."""
    if s == 0.0:
        return np.eye(spec.n)
    return FundamentalSolution(spec, 0.0, s, rtol, atol).phi(s)


@dataclass(frozen=True)
class Gramian:
    t0: float
    t1: float
    W: np.ndarray
    min_eig: float

    @property
    def rel_min_eig(self) -> float:
        scale = np.trace(self.W) / self.W.shape[0]
        return self.min_eig / scale if scale > 0 else self.min_eig


def controllability_gramian(spec: ProblemSpec, t0: float, t1: float,
                            rtol: float = DEFAULTS.rtol,
                            atol: float = DEFAULTS.atol) -> Gramian:
    """Controllability Gramian of [A, B] on [t0, t1].

    Accumulated along the same adaptive integration that produces the inverse
    transition matrix, so its accuracy tracks the integrator tolerance.
    """
    if not (0 <= t0 < t1 <= spec.T):
        raise ValueError("require 0 <= t0 < t1 <= T")
    n = spec.n
    eye = np.eye(n).ravel()

    def rhs_inv(s, z):
        return (-z.reshape(n, n) @ spec.A(s)).ravel()

    minv_t0 = eye if t0 == 0.0 else _run_ivp(
        rhs_inv, (0.0, t0), eye, rtol, atol, dense_output=False).y[:, -1]

    def rhs(s, z):
        Minv = z[:n * n].reshape(n, n)
        M = Minv @ spec.B(s)
        return np.concatenate([(-Minv @ spec.A(s)).ravel(), (M @ M.T).ravel()])

    z_end = _run_ivp(rhs, (t0, t1), np.concatenate([minv_t0, np.zeros(n * n)]),
                     rtol, atol, dense_output=False).y[:, -1]
    W = z_end[n * n:].reshape(n, n)
    W = 0.5 * (W + W.T)
    return Gramian(t0, t1, W, float(np.linalg.eigvalsh(W)[0]))


def kalman_rank(A, B) -> int:
    """Numerical rank of the controllability block matrix of a constant pair."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    C = np.hstack(blocks)
    sv = np.linalg.svd(C, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    thresh = n * sv[0] * np.finfo(float).eps
    return int(np.sum(sv > thresh))


def min_energy_steering(spec: ProblemSpec, ta: float, tb: float,
                        xa: np.ndarray, xb: np.ndarray,
                        opts: SolverOptions = DEFAULTS,
                        n_samples: int | None = None):
    """Gramian-based minimum-norm control steering xa at ta to xb at tb.

    Returns (times, states, controls) sampled uniformly on [ta, tb].
    """
    n, m = spec.n, spec.m
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    eye = np.eye(n).ravel()

    def rhs(s, z):
        M = z[:n * n].reshape(n, n)
        Minv = z[n * n:2 * n * n].reshape(n, n)
        A = spec.A(s)
        MB = Minv @ spec.B(s)
        return np.concatenate([(A @ M).ravel(), (-Minv @ A).ravel(),
                               (MB @ MB.T).ravel()])

    pass1 = _run_ivp(rhs, (ta, tb), np.concatenate([eye, eye, np.zeros(n * n)]),
                     opts.rtol, opts.atol)
    z_end = pass1.sol(tb)
    W = z_end[2 * n * n:].reshape(n, n)
    W = 0.5 * (W + W.T)
    eigs = np.linalg.eigvalsh(W)
    gram_tol = opts.gram_rel_tol * max(np.trace(W), 0.0) / n
    if eigs[0] <= gram_tol:
        raise SingularGramian(
            f"Gramian on [{ta:g}, {tb:g}] has min eig {eigs[0]:.3e} <= {gram_tol:.3e}")
    minv_tb = z_end[n * n:2 * n * n].reshape(n, n)
    d = minv_tb @ xb - xa
    w_coeff = np.linalg.solve(W, d)

    def control(s):
        minv = pass1.sol(s)[n * n:2 * n * n].reshape(n, n)
        return spec.B(s).T @ minv.T @ w_coeff

    def rhs_x(s, x):
        return spec.A(s) @ x + spec.B(s) @ control(s)

    pass2 = _run_ivp(rhs_x, (ta, tb), xa, opts.rtol, opts.atol)
    ts = np.linspace(ta, tb, n_samples or opts.n_standoff_samples)
    X = pass2.sol(ts).T
    U = np.array([control(s) for s in ts]).reshape(ts.size, m)
    return ts, X, U


def steering_control(spec: ProblemSpec, t0: float, x: np.ndarray,
                     target_zero: bool = True,
                     opts: SolverOptions = DEFAULTS,
                     n_samples: int = 401) -> Trajectory:
    """Trajectory of the closed-form steering control on [t0, T].

    Drives x to the origin, or to the problem target when ``target_zero`` is
    false.
    """
    xb = np.zeros(spec.n) if target_zero else spec.y
    ts, X, U = min_energy_steering(spec, t0, spec.T, x, xb, opts, n_samples)
    miss = float(np.linalg.norm(X[-1] - xb))
    funs = np.array([eval_functional(f, Trajectory(ts, X, U))
                     for f in (spec.cost,) + spec.constraints])
    return Trajectory(ts, X, U, terminal_miss=miss, functionals=funs)
