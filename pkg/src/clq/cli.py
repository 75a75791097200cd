"""Command-line front-end.

Subcommands: ``check`` (controllability), ``solve`` (full constrained solve
with CSV/figure/report outputs), ``oracle`` (side-by-side comparison against
the direct-transcription path), ``penalty`` (terminal-penalty convergence
trace).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import controllability, oracle, plotting
from .dual import certify, maximize_dual
from .errors import (InfeasibleQP, IntegratorFailure, ProblemFileError,
                     UnboundedDual)
from .model import LambdaWeights, Trajectory
from .options import SolverOptions
from .problem_io import load_problem
from .riccati import PENALTY_LADDER, solve_penalized
from .synthesis import value_function

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_UNCONTROLLABLE = 3
EXIT_INFEASIBLE = 4
EXIT_INTEGRATOR = 5


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _atomic_write(path: Path, writer):
    """Write via a temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_trajectory_csv(path: Path, traj: Trajectory, meta: dict):
    n = traj.states.shape[1]
    m = traj.controls.shape[1]

    def writer(fh):
        w = csv.writer(fh)
        w.writerow(["s"] + [f"x_{i + 1}" for i in range(n)]
                   + [f"u_{i + 1}" for i in range(m)])
        for j in range(traj.times.size):
            w.writerow([repr(float(traj.times[j]))]
                       + [repr(float(v)) for v in traj.states[j]]
                       + [repr(float(v)) for v in traj.controls[j]])
        for key, val in meta.items():
            fh.write(f"# {key}={val!r}\n")

    _atomic_write(path, writer)


def _write_dual_trace_csv(path: Path, trace, k: int):
    def writer(fh):
        w = csv.writer(fh)
        w.writerow(["iter"] + [f"lambda_{i + 1}" for i in range(k)]
                   + ["phi", "grad_norm", "step"])
        for row in trace:
            w.writerow([row.iteration] + [repr(float(v)) for v in row.lam]
                       + [repr(float(row.phi)), repr(float(row.grad_norm)),
                          repr(float(row.step))])

    _atomic_write(path, writer)


def _opts_from_args(opts: SolverOptions, args, T_minus_t0: float) -> SolverOptions:
    kw = {}
    if args.eps_T is not None:
        kw["eps_T_frac"] = args.eps_T / T_minus_t0
    if args.rtol is not None:
        kw["rtol"] = args.rtol
    if getattr(args, "atol", None) is not None:
        kw["atol"] = args.atol
    if getattr(args, "dual_tol", None) is not None:
        kw["dual_tol"] = args.dual_tol
    if getattr(args, "N", None) is not None:
        kw["N_oracle"] = args.N
    return opts.with_(**kw) if kw else opts


def _load(args):
    spec, opts = load_problem(args.file)
    return spec, _opts_from_args(opts, args, spec.T - spec.t0)


def cmd_check(args) -> int:
    spec, opts = _load(args)
    gram = controllability.controllability_gramian(spec, spec.t0, spec.T,
                                                   opts.rtol, opts.atol)
    line = f"min_eig={_fmt(gram.min_eig)}"
    if spec.A.is_constant() and spec.B.is_constant():
        rank = controllability.kalman_rank(spec.A.values[0], spec.B.values[0])
        line += f" rank={rank}/{spec.n}"
    print(line)
    scale = max(np.trace(gram.W) / spec.n, 0.0)
    if gram.min_eig <= opts.gram_rel_tol * scale or gram.min_eig <= 0:
        print("system is NOT completely controllable on the horizon")
        return EXIT_UNCONTROLLABLE
    return EXIT_OK


def cmd_solve(args) -> int:
    spec, opts = _load(args)
    out = Path(args.out)
    result = maximize_dual(spec, opts)
    report = certify(result, spec)
    traj = result.primal_traj

    meta = {"terminal_miss": float(traj.terminal_miss)}
    for i, v in enumerate(traj.functionals):
        meta[f"J_{i}"] = float(v)
    _write_trajectory_csv(out / "trajectory.csv", traj, meta)
    _write_dual_trace_csv(out / "dual_trace.csv", result.trace, spec.k)
    plotting.save_trajectory_plot(traj, out / "trajectory.png")
    if spec.k and result.trace:
        plotting.save_dual_trace_plot(result.trace, out / "dual_trace.png")

    lines = ["constrained LQ solve report", ""]
    if spec.k:
        lam_str = ", ".join(_fmt(v) for v in result.lam_star.lam)
        lines.append(f"lambda*      = [{lam_str}]")
    lines.append(f"phi(lambda*) = {_fmt(result.dual_value)}")
    for i, v in enumerate(traj.functionals):
        lines.append(f"J_{i}          = {_fmt(float(v))}")
    for i, s in enumerate(result.slack, start=1):
        lines.append(f"slack_{i}      = {_fmt(float(s))}")
    lines.append(f"terminal miss = {_fmt(traj.terminal_miss)}")
    lines.append(f"kkt residual  = {_fmt(result.kkt_residual)}")
    lines.append(f"duality gap proxy = {_fmt(report.gap_proxy)}")
    text = "\n".join(lines) + "\n"
    _atomic_write(out / "report.txt", lambda fh: fh.write(text))
    print(text, end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec, opts = _load(args)
    N = opts.N_oracle
    tr = oracle.transcribe(spec, N, opts)
    if spec.k:
        result = maximize_dual(spec, opts)
        ric_value = float(result.primal_traj.functionals[0])
        _, orc_value, lam_orc = oracle.solve_constrained(tr, opts=opts)
        lam_gap = float(np.max(np.abs(lam_orc - result.lam_star.lam)))
        extra = (f" lambda_riccati=[{', '.join(_fmt(v) for v in result.lam_star.lam)}]"
                 f" lambda_oracle=[{', '.join(_fmt(v) for v in lam_orc)}]"
                 f" lambda_gap={_fmt(lam_gap)}")
    else:
        ric_value = value_function(spec, LambdaWeights.zeros(0), opts)
        _, orc_value = oracle.solve_equality_qp(tr)
        extra = ""
    gap = abs(orc_value - ric_value) / (1.0 + abs(ric_value))
    print(f"riccati={_fmt(ric_value)} oracle={_fmt(orc_value)} "
          f"rel_gap={_fmt(gap)}{extra}")
    return EXIT_OK if gap <= 0.02 else EXIT_FAIL


def cmd_penalty(args) -> int:
    spec, opts = _load(args)
    out = Path(args.out)
    ladder = args.ladder or list(PENALTY_LADDER)
    limit = value_function(spec, LambdaWeights.zeros(spec.k), opts)
    values = []
    for w in ladder:
        pb = solve_penalized(spec, LambdaWeights.zeros(spec.k), w, opts=opts)
        values.append(pb.value(spec.t0, spec.x))

    def writer(fh):
        w = csv.writer(fh)
        w.writerow(["i", "V_i", "V", "gap"])
        for wi, vi in zip(ladder, values):
            w.writerow([repr(float(wi)), repr(float(vi)), repr(float(limit)),
                        repr(float(limit - vi))])

    _atomic_write(out / "penalty.csv", writer)
    plotting.save_penalty_plot(ladder, values, limit, out / "penalty.png")
    for wi, vi in zip(ladder, values):
        print(f"i={_fmt(wi)} V_i={_fmt(vi)} V={_fmt(limit)} gap={_fmt(limit - vi)}")
    diffs = np.diff(values)
    tol = 1e-9 * (1.0 + abs(limit))
    if np.any(diffs < -tol) or np.any(limit - np.asarray(values) < -1e-6 * (1 + abs(limit))):
        print("penalty values are not monotone below the constrained value")
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clq",
                                description="Constrained LQ steering solver")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=False, n_flag=False):
        sp.add_argument("file", help="problem file (YAML)")
        sp.add_argument("--eps-T", dest="eps_T", type=float, default=None,
                        help="terminal standoff (time units)")
        sp.add_argument("--rtol", type=float, default=None)
        sp.add_argument("--atol", type=float, default=None)
        sp.add_argument("--dual-tol", dest="dual_tol", type=float, default=None)
        if out:
            sp.add_argument("--out", default=".", help="output directory")
        if n_flag:
            sp.add_argument("--N", type=int, default=None,
                            help="transcription intervals")

    sp = sub.add_parser("check", help="verify complete controllability")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("solve", help="solve the constrained problem")
    common(sp, out=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="compare against direct transcription")
    common(sp, n_flag=True)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("penalty", help="terminal-penalty convergence trace")
    common(sp, out=True)
    sp.add_argument("--ladder", type=float, nargs="+", default=None)
    sp.set_defaults(func=cmd_penalty)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProblemFileError as exc:
        print(f"problem file error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UnboundedDual, InfeasibleQP) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IntegratorFailure as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
