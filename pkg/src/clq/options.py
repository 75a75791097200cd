"""Solver-wide numerical defaults, overridable per call or via the CLI."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class SolverOptions:
    rtol: float = 1e-9            # integrator relative tolerance
    atol: float = 1e-11           # integrator absolute tolerance
    eps_T_frac: float = 1e-3      # terminal standoff as a fraction of T - t0
    eps_phi_frac: float = 1e-5    # flow-integration cutoff before the blow-up time
    cond_max: float = 1e12        # condition cap for inversions near the standoff
    gram_rel_tol: float = 1e-9    # relative Gramian positivity threshold
    n_samples: int = 2001         # closed-loop output samples
    n_standoff_samples: int = 51  # samples on the terminal correction segment
    sim_tol: float = 1e-3         # relative value/simulation agreement
    dual_tol: float = 1e-6        # dual ascent stationarity / bracket tolerance
    dual_max_iter: int = 200
    dual_cap: float = 1e5         # multiplier cap for Slater-failure detection
    N_oracle: int = 400           # transcription intervals

    def with_(self, **kw) -> "SolverOptions":
        return replace(self, **kw)

    def eps_T(self, t0: float, T: float) -> float:
        return self.eps_T_frac * (T - t0)

    def miss_tol(self, y_norm: float) -> float:
        return 1e-4 * (1.0 + y_norm)


DEFAULTS = SolverOptions()
