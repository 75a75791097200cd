import numpy as np
import pytest

from clq.errors import DimensionMismatch
from clq.model import (LambdaWeights, ProblemSpec, QuadraticFunctional,
                       TimeGridMatrixFn, Trajectory, combine_weights,
                       eval_functional, validate_spec)
from conftest import const, scalar_spec


class TestTimeGridMatrixFn:
    def test_constant_evaluation(self):
        fn = TimeGridMatrixFn.constant([[2.0, 0.0], [0.0, 3.0]], 1.0)
        for s in (0.0, 0.3, 1.0, 1.5, -0.1):
            np.testing.assert_allclose(fn(s), [[2.0, 0.0], [0.0, 3.0]])
        assert fn.is_constant()

    def test_linear_interpolation(self):
        fn = TimeGridMatrixFn(np.array([0.0, 1.0, 2.0]),
                              np.array([[[0.0]], [[2.0]], [[6.0]]]))
        assert fn(0.5)[0, 0] == pytest.approx(1.0)
        assert fn(1.5)[0, 0] == pytest.approx(4.0)
        assert fn(2.0)[0, 0] == pytest.approx(6.0)

    def test_pc_left_holds_previous_node(self):
        fn = TimeGridMatrixFn(np.array([0.0, 1.0, 2.0]),
                              np.array([[[0.0]], [[2.0]], [[6.0]]]),
                              interp="pc-left")
        assert fn(0.5)[0, 0] == 0.0
        assert fn(1.0)[0, 0] == 2.0
        assert fn(1.5)[0, 0] == 2.0
        assert fn(2.0)[0, 0] == 6.0

    def test_grid_must_increase_from_zero(self):
        with pytest.raises(ValueError):
            TimeGridMatrixFn(np.array([0.5, 1.0]), np.zeros((2, 1, 1)))
        with pytest.raises(ValueError):
            TimeGridMatrixFn(np.array([0.0, 0.0]), np.zeros((2, 1, 1)))

    def test_values_are_read_only(self):
        fn = TimeGridMatrixFn.constant([[1.0]], 1.0)
        with pytest.raises(ValueError):
            fn.values[0, 0, 0] = 2.0

    def test_on_grid_exact_at_supergrid(self):
        fn = TimeGridMatrixFn(np.array([0.0, 1.0]),
                              np.array([[[0.0]], [[4.0]]]))
        re = fn.on_grid(np.array([0.0, 0.25, 1.0]))
        assert re(0.25)[0, 0] == pytest.approx(1.0)
        assert re(0.5)[0, 0] == pytest.approx(fn(0.5)[0, 0])


class TestValidation:
    def test_clean_spec_validates(self, ex2_spec):
        assert validate_spec(ex2_spec).ok

    def test_asymmetric_state_weight_reported(self):
        spec = ProblemSpec(2, 1, const(np.eye(2)), const([[1.0], [0.0]]),
                           0.0, 1.0, [1.0, 0.0], [0.0, 0.0],
                           QuadraticFunctional(const([[0.0, 1.0], [0.0, 0.0]]),
                                               const([[1.0]])))
        rep = validate_spec(spec)
        assert not rep.ok
        assert any("not symmetric" in msg for msg in rep.issues)

    def test_indefinite_state_weight_reported(self):
        spec = scalar_spec(Q0=-1.0)
        rep = validate_spec(spec)
        assert any("not positive semidefinite" in msg for msg in rep.issues)

    def test_degenerate_control_weight_reported(self):
        spec = scalar_spec(R0=0.0)
        rep = validate_spec(spec)
        assert any("R_0 not uniformly positive definite" in msg
                   for msg in rep.issues)


class TestProblemSpec:
    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            ProblemSpec(2, 1, const(np.eye(2)), const([[1.0]]), 0.0, 1.0,
                        [1.0, 0.0], [0.0, 0.0],
                        QuadraticFunctional(const(np.eye(2)), const([[1.0]])))
        with pytest.raises(DimensionMismatch):
            ProblemSpec(1, 1, const([[1.0]]), const([[1.0]]), 0.0, 1.0,
                        [1.0, 2.0], [0.0],
                        QuadraticFunctional(const([[0.0]]), const([[1.0]])))

    def test_constraints_need_budget(self):
        with pytest.raises(ValueError):
            ProblemSpec(1, 1, const([[1.0]]), const([[1.0]]), 0.0, 1.0,
                        [1.0], [0.0],
                        QuadraticFunctional(const([[0.0]]), const([[1.0]])),
                        (QuadraticFunctional(const([[0.0]]), const([[1.0]])),))

    def test_budget_must_be_positive(self):
        with pytest.raises(ValueError):
            QuadraticFunctional(const([[0.0]]), const([[1.0]]), bound=-1.0)


class TestLambdaWeights:
    def test_nonnegativity(self):
        with pytest.raises(ValueError):
            LambdaWeights(np.array([-0.1]))
        assert len(LambdaWeights.zeros(3)) == 3


class TestCombineWeights:
    def test_weighted_sum(self, ex2_spec):
        Q, R = combine_weights(ex2_spec, LambdaWeights(np.array([2.0])))
        assert Q(0.5)[0, 0] == pytest.approx(15.0)
        assert R(0.5)[0, 0] == pytest.approx(3.0)

    def test_multiplier_count_checked(self, ex1_spec):
        with pytest.raises(DimensionMismatch):
            combine_weights(ex1_spec, LambdaWeights(np.array([1.0])))

    def test_merged_grid_preserves_nodes(self):
        T = 1.0
        Qa = TimeGridMatrixFn(np.array([0.0, 0.3, 1.0]),
                              np.array([[[1.0]], [[3.0]], [[1.0]]]))
        spec = ProblemSpec(1, 1, const([[1.0]], T), const([[1.0]], T), 0.0, T,
                           [1.0], [0.0],
                           QuadraticFunctional(Qa, const([[1.0]], T)),
                           (QuadraticFunctional(const([[1.0]], T),
                                                const([[1.0]], T), bound=1.0),))
        Q, _ = combine_weights(spec, LambdaWeights(np.array([1.0])))
        assert 0.3 in Q.grid
        assert Q(0.3)[0, 0] == pytest.approx(4.0)


class TestFunctionalEvaluation:
    def test_quadratic_of_linear_trajectory(self):
        # X(s) = s, U(s) = 1 with Q = R = 1: integral of s^2 + 1 over [0, 1]
        ts = np.linspace(0.0, 1.0, 2001)
        traj = Trajectory(ts, ts[:, None], np.ones((ts.size, 1)))
        fun = QuadraticFunctional(const([[1.0]]), const([[1.0]]))
        assert eval_functional(fun, traj) == pytest.approx(4.0 / 3.0, rel=1e-6)

    def test_dimension_mismatch_rejected(self):
        ts = np.linspace(0.0, 1.0, 11)
        traj = Trajectory(ts, np.zeros((11, 2)), np.zeros((11, 1)))
        fun = QuadraticFunctional(const([[1.0]]), const([[1.0]]))
        with pytest.raises(DimensionMismatch):
            eval_functional(fun, traj)


class TestTrajectory:
    def test_row_count_checked(self):
        with pytest.raises(DimensionMismatch):
            Trajectory(np.array([0.0, 1.0]), np.zeros((3, 1)), np.zeros((2, 1)))

    def test_arrays_read_only(self):
        traj = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 1)),
                          np.zeros((2, 1)))
        with pytest.raises(ValueError):
            traj.states[0, 0] = 1.0
