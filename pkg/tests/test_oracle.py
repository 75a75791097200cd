import numpy as np
import pytest

from clq.dual import maximize_dual
from clq.errors import InfeasibleQP, SingularKKT
from clq.model import ProblemSpec, QuadraticFunctional
from clq.options import DEFAULTS
from clq.oracle import solve_constrained, solve_equality_qp, transcribe
from conftest import const, j_exact, scalar_spec


class TestTranscription:
    def test_shapes(self, ex2_spec):
        tr = transcribe(ex2_spec, 50)
        assert tr.G.shape == (1, 50)
        assert tr.r.shape == (1,)
        assert len(tr.forms) == 2
        assert tr.forms[0].H.shape == (50, 50)
        assert tr.h == pytest.approx(1.0 / 50)

    def test_rejects_too_few_intervals(self, dbl_int_spec):
        with pytest.raises(ValueError):
            transcribe(dbl_int_spec, 1)

    def test_form_evaluates_gridded_control(self, ex1_spec):
        # constant control u = 1: energy is the horizon length
        tr = transcribe(ex1_spec, 100)
        u = np.ones(100)
        assert tr.forms[0](u) == pytest.approx(1.0, rel=1e-6)


class TestEqualityQP:
    def test_scalar_min_energy(self, ex1_spec):
        tr = transcribe(ex1_spec, 400)
        u, val = solve_equality_qp(tr)
        assert val == pytest.approx(j_exact(1.0, 0.0), rel=1e-2)
        # the terminal map is met exactly by construction
        assert np.linalg.norm(tr.G @ u - tr.r) <= 1e-8

    def test_nonzero_target(self):
        spec = scalar_spec(x=1.0, y=1.0)
        tr = transcribe(spec, 400)
        _, val = solve_equality_qp(tr)
        assert val == pytest.approx(j_exact(1.0, 1.0), rel=1e-2)

    def test_double_integrator(self, dbl_int_spec):
        # rest-to-rest double integrator: J = 12 for a unit displacement
        tr = transcribe(dbl_int_spec, 400)
        _, val = solve_equality_qp(tr)
        assert val == pytest.approx(12.0, rel=1e-2)

    def test_unreachable_target_detected(self):
        A = const(np.diag([1.0, 2.0]))
        B = const([[1.0], [0.0]])
        cost = QuadraticFunctional(const(np.zeros((2, 2))), const([[1.0]]))
        spec = ProblemSpec(2, 1, A, B, 0.0, 1.0, [0.0, 1.0], [0.0, 0.0], cost)
        with pytest.raises(InfeasibleQP):
            solve_equality_qp(transcribe(spec, 50))

    def test_deficient_map_with_consistent_target(self):
        A = const(np.diag([1.0, 2.0]))
        B = const([[1.0], [0.0]])
        cost = QuadraticFunctional(const(np.zeros((2, 2))), const([[1.0]]))
        spec = ProblemSpec(2, 1, A, B, 0.0, 1.0, [1.0, 0.0], [0.0, 0.0], cost)
        with pytest.raises(SingularKKT):
            solve_equality_qp(transcribe(spec, 50))


class TestConstrainedSolve:
    def test_matches_dual_path(self, ex2_spec):
        res = maximize_dual(ex2_spec)
        tr = transcribe(ex2_spec, 400)
        u, val, lam = solve_constrained(tr)
        ric = float(res.primal_traj.functionals[0])
        assert abs(val - ric) / (1.0 + abs(ric)) <= 0.01
        assert abs(lam[0] - res.lam_star.lam[0]) <= 0.01

    def test_slack_budget(self):
        spec = scalar_spec(x=1.0, y=0.0, Q0=15.0,
                           constraints=((0.0, 1.0, 50.0),))
        tr = transcribe(spec, 200)
        _, val, lam = solve_constrained(tr)
        assert lam[0] == 0.0
        u0, val0 = solve_equality_qp(tr)
        assert val == pytest.approx(val0)

    def test_infeasible_budget(self):
        spec = scalar_spec(x=1.0, y=0.0, Q0=15.0,
                           constraints=((0.0, 1.0, 2.0),))
        tr = transcribe(spec, 100)
        opts = DEFAULTS.with_(dual_cap=5e3)
        with pytest.raises(InfeasibleQP):
            solve_constrained(tr, opts=opts)

    def test_no_constraints_passthrough(self, ex1_spec):
        tr = transcribe(ex1_spec, 100)
        u, val, lam = solve_constrained(tr)
        assert lam.size == 0
        assert val == pytest.approx(solve_equality_qp(tr)[1])


class TestDiscretizationOrder:
    def test_error_shrinks_with_n(self, ex1_spec):
        exact = j_exact(1.0, 0.0)
        errs = [abs(solve_equality_qp(transcribe(ex1_spec, N))[1] - exact)
                for N in (50, 100, 200)]
        assert errs[0] > errs[1] > errs[2]
