"""Problem-file parsing and emission (YAML).

A problem file maps one-to-one onto a ProblemSpec plus solver settings.
Matrices are given either as a constant row-major literal or as a sampled
table of ``[s, entries...]`` rows; unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import ProblemFileError
from .model import (ProblemSpec, QuadraticFunctional, TimeGridMatrixFn)
from .options import DEFAULTS, SolverOptions

_TOP_KEYS = {"horizon", "dims", "dynamics", "cost", "constraints", "boundary", "solver"}
_SOLVER_KEYS = {"eps_T", "rtol", "atol", "dual_tol", "N_oracle"}


def _require_keys(section: dict, allowed: set, required: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ProblemFileError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ProblemFileError(f"missing keys in {where}: {sorted(missing)}")


def _parse_matrix(entry, rows: int, cols: int, T: float, where: str) -> TimeGridMatrixFn:
    if isinstance(entry, dict):
        _require_keys(entry, {"table", "interp"}, {"table"}, where)
        interp = entry.get("interp", "linear")
        table = np.asarray(entry["table"], dtype=float)
        if table.ndim != 2 or table.shape[1] != 1 + rows * cols:
            raise ProblemFileError(
                f"{where}: table rows must be [s, {rows * cols} entries]")
        grid = table[:, 0]
        vals = table[:, 1:].reshape(-1, rows, cols)
        try:
            return TimeGridMatrixFn(grid, vals, interp)
        except ValueError as exc:
            raise ProblemFileError(f"{where}: {exc}") from exc
    M = np.atleast_2d(np.asarray(entry, dtype=float))
    if M.shape != (rows, cols):
        raise ProblemFileError(f"{where}: expected a {rows}x{cols} matrix, got {M.shape}")
    return TimeGridMatrixFn.constant(M, T)


def load_problem(path) -> tuple[ProblemSpec, SolverOptions]:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ProblemFileError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise ProblemFileError("problem file must be a mapping")
    return parse_problem(doc)


def parse_problem(doc: dict) -> tuple[ProblemSpec, SolverOptions]:
    _require_keys(doc, _TOP_KEYS, {"horizon", "dims", "dynamics", "cost", "boundary"},
                  "problem file")
    _require_keys(doc["horizon"], {"t0", "T"}, {"t0", "T"}, "horizon")
    _require_keys(doc["dims"], {"n", "m"}, {"n", "m"}, "dims")
    _require_keys(doc["dynamics"], {"A", "B"}, {"A", "B"}, "dynamics")
    _require_keys(doc["cost"], {"Q", "R"}, {"Q", "R"}, "cost")
    _require_keys(doc["boundary"], {"x", "y"}, {"x", "y"}, "boundary")

    t0 = float(doc["horizon"]["t0"])
    T = float(doc["horizon"]["T"])
    n = int(doc["dims"]["n"])
    m = int(doc["dims"]["m"])

    A = _parse_matrix(doc["dynamics"]["A"], n, n, T, "dynamics.A")
    B = _parse_matrix(doc["dynamics"]["B"], n, m, T, "dynamics.B")
    cost = QuadraticFunctional(
        _parse_matrix(doc["cost"]["Q"], n, n, T, "cost.Q"),
        _parse_matrix(doc["cost"]["R"], m, m, T, "cost.R"))

    constraints = []
    for idx, con in enumerate(doc.get("constraints") or [], start=1):
        where = f"constraint[{idx}]"
        _require_keys(con, {"Q", "R", "c"}, {"Q", "R", "c"}, where)
        constraints.append(QuadraticFunctional(
            _parse_matrix(con["Q"], n, n, T, where + ".Q"),
            _parse_matrix(con["R"], m, m, T, where + ".R"),
            bound=float(con["c"])))

    x = np.asarray(doc["boundary"]["x"], dtype=float).ravel()
    y = np.asarray(doc["boundary"]["y"], dtype=float).ravel()

    try:
        spec = ProblemSpec(n=n, m=m, A=A, B=B, t0=t0, T=T, x=x, y=y,
                           cost=cost, constraints=tuple(constraints))
    except Exception as exc:
        raise ProblemFileError(str(exc)) from exc

    opts = DEFAULTS
    solver = doc.get("solver") or {}
    _require_keys(solver, _SOLVER_KEYS, set(), "solver")
    kw = {}
    if "eps_T" in solver:
        kw["eps_T_frac"] = float(solver["eps_T"]) / (T - t0)
    if "rtol" in solver:
        kw["rtol"] = float(solver["rtol"])
    if "atol" in solver:
        kw["atol"] = float(solver["atol"])
    if "dual_tol" in solver:
        kw["dual_tol"] = float(solver["dual_tol"])
    if "N_oracle" in solver:
        kw["N_oracle"] = int(solver["N_oracle"])
    if kw:
        opts = opts.with_(**kw)
    return spec, opts


def _emit_matrix(fn: TimeGridMatrixFn):
    if fn.grid.size == 2 and fn.is_constant():
        return [[float(v) for v in row] for row in fn.values[0]]
    table = [[float(s)] + [float(v) for v in M.ravel()]
             for s, M in zip(fn.grid, fn.values)]
    return {"table": table, "interp": fn.interp}


def emit_problem(spec: ProblemSpec, opts: SolverOptions | None = None) -> dict:
    doc = {
        "horizon": {"t0": float(spec.t0), "T": float(spec.T)},
        "dims": {"n": spec.n, "m": spec.m},
        "dynamics": {"A": _emit_matrix(spec.A), "B": _emit_matrix(spec.B)},
        "cost": {"Q": _emit_matrix(spec.cost.Q), "R": _emit_matrix(spec.cost.R)},
        "boundary": {"x": [float(v) for v in spec.x],
                     "y": [float(v) for v in spec.y]},
    }
    if spec.constraints:
        doc["constraints"] = [
            {"Q": _emit_matrix(c.Q), "R": _emit_matrix(c.R), "c": float(c.bound)}
            for c in spec.constraints]
    if opts is not None:
        doc["solver"] = {
            "eps_T": opts.eps_T(spec.t0, spec.T),
            "rtol": opts.rtol,
            "atol": opts.atol,
            "dual_tol": opts.dual_tol,
            "N_oracle": opts.N_oracle,
        }
    return doc


def dump_problem(spec: ProblemSpec, path, opts: SolverOptions | None = None):
    Path(path).write_text(yaml.safe_dump(emit_problem(spec, opts), sort_keys=False))
