"""Core data model: time-varying matrices, quadratic functionals, problem spec.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import DimensionMismatch

SYM_TOL = 1e-12       # node symmetry tolerance
PSD_EIG_TOL = -1e-10  # eigenvalue tolerance for positive semidefiniteness
DEFAULT_DELTA = 1e-8  # declared uniform lower bound for the cost control weight


def _as_matrix_nodes(values) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 3:
        raise DimensionMismatch(f"expected (nodes, r, c) value array, got shape {vals.shape}")
    return vals


@dataclass(frozen=True)
class TimeGridMatrixFn:
    """Matrix-valued function of time, sampled on a grid spanning [0, T].

    Evaluation between nodes uses linear interpolation by default; the
    ``pc-left`` mode holds the value of the node at or before the query time.
    """

    grid: np.ndarray
    values: np.ndarray
    interp: str = "linear"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = _as_matrix_nodes(self.values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must have at least 2 nodes")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] != 0.0:
            raise ValueError("grid must start at 0")
        if values.shape[0] != grid.size:
            raise DimensionMismatch("one value matrix per grid node required")
        if self.interp not in ("linear", "pc-left"):
            raise ValueError(f"unknown interpolation mode {self.interp!r}")
        grid.setflags(write=False)
        values.setflags(write=False)

    @classmethod
    def constant(cls, M, T: float, interp: str = "linear") -> "TimeGridMatrixFn":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(np.array([0.0, float(T)]), np.stack([M, M]), interp)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    def is_constant(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.values - self.values[0]) <= tol))

    def __call__(self, s: float) -> np.ndarray:
        s = float(np.clip(s, self.grid[0], self.grid[-1]))
        j = int(np.searchsorted(self.grid, s, side="right")) - 1
        j = min(max(j, 0), self.grid.size - 2)
        if self.interp == "pc-left":
            # hold the node at or before s
            return self.values[-1] if s == self.grid[-1] else self.values[j]
        w = (s - self.grid[j]) / (self.grid[j + 1] - self.grid[j])
        return (1.0 - w) * self.values[j] + w * self.values[j + 1]

    def on_grid(self, grid: np.ndarray) -> "TimeGridMatrixFn":
        """Resample onto a (super)grid. Exact for linear/pc data when `grid`
        contains the original nodes."""
        vals = np.stack([self(s) for s in grid])
        return TimeGridMatrixFn(np.asarray(grid, dtype=float), vals, self.interp)


def merge_grids(*fns: TimeGridMatrixFn) -> np.ndarray:
    return np.unique(np.concatenate([f.grid for f in fns]))


@dataclass(frozen=True)
class QuadraticFunctional:
    """Integral quadratic functional with state weight Q and control weight R.

    ``bound`` is the budget c_i for constraint functionals and ``None`` for
    the cost functional.
    """

    Q: TimeGridMatrixFn
    R: TimeGridMatrixFn
    bound: Optional[float] = None

    def __post_init__(self):
        if self.Q.shape[0] != self.Q.shape[1] or self.R.shape[0] != self.R.shape[1]:
            raise DimensionMismatch("Q and R must be square")
        if self.bound is not None and self.bound <= 0:
            raise ValueError("budget must be strictly positive")


@dataclass(frozen=True)
class LambdaWeights:
    """Nonnegative multiplier vector for the constraint functionals."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if np.any(lam < 0):
            raise ValueError("multipliers must be nonnegative")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def zeros(cls, k: int) -> "LambdaWeights":
        return cls(np.zeros(k))

    def __len__(self) -> int:
        return self.lam.size


@dataclass(frozen=True)
class ProblemSpec:
    """Constrained LQ steering problem on [t0, T] with target terminal state."""

    n: int
    m: int
    A: TimeGridMatrixFn
    B: TimeGridMatrixFn
    t0: float
    T: float
    x: np.ndarray
    y: np.ndarray
    cost: QuadraticFunctional
    constraints: tuple[QuadraticFunctional, ...] = ()
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not (0 <= self.t0 < self.T):
            raise ValueError("require 0 <= t0 < T")
        if self.A.shape != (self.n, self.n):
            raise DimensionMismatch(f"A must be {self.n}x{self.n}")
        if self.B.shape != (self.n, self.m):
            raise DimensionMismatch(f"B must be {self.n}x{self.m}")
        for fun in (self.cost,) + self.constraints:
            if fun.Q.shape != (self.n, self.n):
                raise DimensionMismatch(f"Q must be {self.n}x{self.n}")
            if fun.R.shape != (self.m, self.m):
                raise DimensionMismatch(f"R must be {self.m}x{self.m}")
        if x.size != self.n or y.size != self.n:
            raise DimensionMismatch("x and y must have length n")
        for con in self.constraints:
            if con.bound is None:
                raise ValueError("constraint functionals must carry a budget")

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([con.bound for con in self.constraints])


@dataclass(frozen=True)
class Trajectory:
    """Sampled state/control pair with evaluated functional values.

    ``controls`` carries one row per sample; the final row holds the left
    limit of the control (the optimal control is only defined on [t0, T)).
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    terminal_miss: float = np.nan
    functionals: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        controls = np.atleast_2d(np.asarray(self.controls, dtype=float))
        if times.size == 0:
            raise ValueError("empty trajectory")
        if states.shape[0] != times.size or controls.shape[0] != times.size:
            raise DimensionMismatch("one state/control row per sample required")
        for arr in (times, states, controls):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.issues)


def _check_sym_psd(fn: TimeGridMatrixFn, name: str, issues: list,
                   min_eig: float = PSD_EIG_TOL, require_pd: bool = False,
                   delta: float = 0.0):
    for j, M in enumerate(fn.values):
        asym = np.max(np.abs(M - M.T))
        if asym > SYM_TOL:
            issues.append(f"{name} node {j}: not symmetric (|M - M^T|_max = {asym:.3e})")
            continue
        w = np.linalg.eigvalsh(0.5 * (M + M.T))
        if w[0] < min_eig:
            issues.append(f"{name} node {j}: not positive semidefinite (min eig = {w[0]:.3e})")
        elif require_pd and w[0] < delta:
            issues.append(f"{name} node {j}: not uniformly positive definite "
                          f"(min eig = {w[0]:.3e} < delta = {delta:.3e})")


def validate_spec(spec: ProblemSpec) -> ValidationReport:
    """Check the standing node-wise weight assumptions and report violations.

    Controllability is checked separately; an empty report means the weight
    hypotheses hold at every grid node.
    """
    issues: list[str] = []
    _check_sym_psd(spec.cost.Q, "Q_0", issues)
    _check_sym_psd(spec.cost.R, "R_0", issues, require_pd=True, delta=spec.delta)
    for i, con in enumerate(spec.constraints, start=1):
        _check_sym_psd(con.Q, f"Q_{i}", issues)
        _check_sym_psd(con.R, f"R_{i}", issues)
    # relabel the uniform-positivity message for the cost control weight
    issues = [msg.replace("not uniformly positive definite",
                          "R_0 not uniformly positive definite")
              if msg.startswith("R_0") else msg for msg in issues]
    return ValidationReport(tuple(issues))


def combine_weights(spec: ProblemSpec, lam: LambdaWeights
                    ) -> tuple[TimeGridMatrixFn, TimeGridMatrixFn]:
    """Form the multiplier-weighted state and control weights on the merged grid."""
    if len(lam) != spec.k:
        raise DimensionMismatch(f"expected {spec.k} multipliers, got {len(lam)}")
    q_fns = [spec.cost.Q] + [c.Q for c in spec.constraints]
    r_fns = [spec.cost.R] + [c.R for c in spec.constraints]
    qgrid = merge_grids(*q_fns)
    rgrid = merge_grids(*r_fns)
    coeff = np.concatenate([[1.0], lam.lam])
    qvals = sum(w * f.on_grid(qgrid).values for w, f in zip(coeff, q_fns))
    rvals = sum(w * f.on_grid(rgrid).values for w, f in zip(coeff, r_fns))
    interp = spec.cost.Q.interp
    return (TimeGridMatrixFn(qgrid, qvals, interp),
            TimeGridMatrixFn(rgrid, rvals, interp))


def eval_functional(fun: QuadraticFunctional, traj: Trajectory) -> float:
    """Composite-trapezoid value of the quadratic integrand along a trajectory."""
    t, X, U = traj.times, traj.states, traj.controls
    if X.shape[1] != fun.Q.shape[0] or U.shape[1] != fun.R.shape[0]:
        raise DimensionMismatch("trajectory dimensions do not match the functional")
    integrand = np.empty(t.size)
    for j in range(t.size):
        Q = fun.Q(t[j])
        R = fun.R(t[j])
        integrand[j] = X[j] @ Q @ X[j] + U[j] @ R @ U[j]
    return float(trapezoid(integrand, t))
