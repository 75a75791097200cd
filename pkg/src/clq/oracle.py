"""Direct-transcription oracle: brute-force ground truth for small instances.

The control is piecewise constant on a uniform grid; state influence is
assembled from the transition matrix with midpoint weights, giving an
order-2 discretization.  The terminal equality is enforced exactly through a
dense KKT system, and budgets are handled by the same dual ascent applied to
the finite-dimensional program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controllability import FundamentalSolution
from .errors import InfeasibleQP, SingularKKT
from .model import ProblemSpec
from .options import DEFAULTS, SolverOptions

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
EQ_TOL = 1e-8


@dataclass(frozen=True)
class QuadForm:
    """u^T H u + 2 b^T u + const, over the stacked control vector."""

    H: np.ndarray
    b: np.ndarray
    const: float

    def __call__(self, u: np.ndarray) -> float:
        return float(u @ self.H @ u + 2.0 * self.b @ u + self.const)


@dataclass(frozen=True)
class Transcription:
    spec: ProblemSpec
    N: int
    times: np.ndarray          # N + 1 interval nodes
    G: np.ndarray              # terminal influence map, n x (m N)
    r: np.ndarray              # target residual after the free response
    forms: tuple[QuadForm, ...]  # cost (index 0) then constraints

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])


def transcribe(spec: ProblemSpec, N: int,
               opts: SolverOptions = DEFAULTS) -> Transcription:
    """Assemble the finite-dimensional program on N control intervals."""
    if N < spec.n:
        raise ValueError("need at least n control intervals")
    n, m = spec.n, spec.m
    t0, T = spec.t0, spec.T
    nodes = np.linspace(t0, T, N + 1)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    h = nodes[1] - nodes[0]

    fs = FundamentalSolution(spec, t0, T, opts.rtol, opts.atol)
    Phi_m = np.stack([fs.phi(s) for s in mids])          # (N, n, n)
    Phinv_m = np.stack([fs.phi_inv(s) for s in mids])
    Phi_T = fs.phi(T)
    B_m = np.stack([spec.B(s) for s in mids])            # (N, n, m)

    D = h * np.einsum("qij,qjm->qim", Phinv_m, B_m)      # (N, n, m)
    G = Phi_T @ np.transpose(D, (1, 0, 2)).reshape(n, N * m)
    r = spec.y - Phi_T @ spec.x

    # influence of each control interval on the state at each midpoint
    Z = np.zeros((N, n, N * m))
    for q in range(N):
        block = np.zeros((n, N * m))
        if q > 0:
            block[:, : q * m] = np.transpose(D[:q], (1, 0, 2)).reshape(n, q * m)
        block[:, q * m:(q + 1) * m] = 0.5 * D[q]
        Z[q] = Phi_m[q] @ block
    x_free = np.einsum("qij,j->qi", Phi_m, spec.x)       # (N, n)

    Zr = Z.reshape(N * n, N * m)
    forms = []
    for fun in (spec.cost,) + spec.constraints:
        Q_m = np.stack([fun.Q(s) for s in mids])
        R_m = np.stack([fun.R(s) for s in mids])
        QZ = np.einsum("qij,qjk->qik", Q_m, Z).reshape(N * n, N * m)
        H = h * (Zr.T @ QZ)
        for q in range(N):
            H[q * m:(q + 1) * m, q * m:(q + 1) * m] += h * R_m[q]
        H = 0.5 * (H + H.T)
        Qxf = np.einsum("qij,qj->qi", Q_m, x_free)
        b = h * np.einsum("qik,qi->k", Z, Qxf)
        const = h * float(np.einsum("qi,qi->", x_free, Qxf))
        forms.append(QuadForm(H, b, const))
    return Transcription(spec, N, nodes, G, r, tuple(forms))


def _weighted_form(tr: Transcription, lam: np.ndarray) -> QuadForm:
    H = tr.forms[0].H.copy()
    b = tr.forms[0].b.copy()
    const = tr.forms[0].const
    for li, f in zip(lam, tr.forms[1:]):
        H += li * f.H
        b += li * f.b
        const += li * f.const
    return QuadForm(H, b, const)


def _check_terminal_map(tr: Transcription):
    sv = np.linalg.svd(tr.G, compute_uv=False)
    n = tr.G.shape[0]
    if sv.size and sv[0] > 0 and sv[-1] > n * sv[0] * 1e-12:
        return
    # row-deficient terminal map: distinguish unreachable target from
    # plain rank deficiency
    u_ls, *_ = np.linalg.lstsq(tr.G, tr.r, rcond=None)
    if np.linalg.norm(tr.G @ u_ls - tr.r) > EQ_TOL * (1.0 + np.linalg.norm(tr.r)):
        raise InfeasibleQP("target not reachable by any gridded control")
    raise SingularKKT("terminal map is row-deficient")


def solve_equality_qp(tr: Transcription,
                      lam: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Minimize the (weighted) quadratic subject to the exact terminal map."""
    lam = np.zeros(tr.spec.k) if lam is None else np.asarray(lam, dtype=float)
    form = _weighted_form(tr, lam)
    _check_terminal_map(tr)
    nmN = form.H.shape[0]
    n = tr.G.shape[0]
    kkt = np.zeros((nmN + n, nmN + n))
    kkt[:nmN, :nmN] = 2.0 * form.H
    kkt[:nmN, nmN:] = tr.G.T
    kkt[nmN:, :nmN] = tr.G
    rhs = np.concatenate([-2.0 * form.b, tr.r])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularKKT(str(exc)) from exc
    u = sol[:nmN]
    return u, form(u)


def solve_constrained(tr: Transcription,
                      bounds: np.ndarray | None = None,
                      opts: SolverOptions = DEFAULTS,
                      tol: float = 1e-6,
                      max_iter: int = 200) -> tuple[np.ndarray, float, np.ndarray]:
    """Discretized constrained optimum via dual ascent over the multipliers.

    Returns (gridded control, primal objective, multiplier vector).
    """
    spec = tr.spec
    k = spec.k
    if bounds is None:
        bounds = spec.bounds
    bounds = np.asarray(bounds, dtype=float)
    if k == 0:
        u, val = solve_equality_qp(tr)
        return u, val, np.zeros(0)

    def inner(lam: np.ndarray):
        u, val = solve_equality_qp(tr, lam)
        return u, val - float(lam @ bounds)

    if k == 1:
        def phi(v: float) -> float:
            return inner(np.array([v]))[1]

        lo, hi = 0.0, 64.0
        f_lo, f_hi = phi(lo), phi(hi)
        while f_hi > f_lo:
            if hi > opts.dual_cap:
                raise InfeasibleQP("dual of the transcribed program is unbounded")
            hi *= 2.0
            f_hi = phi(hi)
        a, b = lo, hi
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        f_c, f_d = phi(c), phi(d)
        while b - a > max(tol, 1e-6):
            if f_c >= f_d:
                b, d, f_d = d, c, f_c
                c = b - GOLDEN * (b - a)
                f_c = phi(c)
            else:
                a, c, f_c = c, d, f_d
                d = a + GOLDEN * (b - a)
                f_d = phi(d)
        lam = np.array([0.5 * (a + b)])
        if lam[0] <= max(tol, 1e-6) and phi(0.0) >= max(f_c, f_d) - 1e-12:
            lam = np.array([0.0])
    else:
        lam = np.zeros(k)
        f = inner(lam)[1]
        for _ in range(max_iter):
            u, _ = solve_equality_qp(tr, lam)
            grad = np.array([form(u) for form in tr.forms[1:]]) - bounds
            proj = np.where(lam > 0, grad, np.maximum(grad, 0.0))
            if np.linalg.norm(proj) <= tol:
                break
            if np.linalg.norm(lam) > opts.dual_cap:
                raise InfeasibleQP("dual of the transcribed program is unbounded")
            step = 1.0 / (1.0 + np.linalg.norm(grad))
            while True:
                cand = np.maximum(lam + step * grad, 0.0)
                f_cand = inner(cand)[1]
                if f_cand >= f + 1e-4 * step * np.linalg.norm(proj) ** 2 or step < 1e-12:
                    break
                step *= 0.5
            lam, f = cand, f_cand

    u, _ = solve_equality_qp(tr, lam)
    return u, tr.forms[0](u), lam
