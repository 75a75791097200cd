import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.linalg import expm

from clq.controllability import (FundamentalSolution, controllability_gramian,
                                 kalman_rank, min_energy_steering,
                                 steering_control)
from clq.errors import SingularGramian
from clq.model import ProblemSpec, QuadraticFunctional
from clq.options import DEFAULTS
from conftest import const


def lti_spec(A, B, T=1.0):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n, m = B.shape
    cost = QuadraticFunctional(const(np.zeros((n, n)), T), const(np.eye(m), T))
    return ProblemSpec(n, m, const(A, T), const(B, T), 0.0, T,
                       np.zeros(n), np.zeros(n), cost)


def gramian_by_quadrature(A, B, T=1.0, nq=4001):
    """Dense-quadrature Gramian of a constant pair, using the matrix exponential."""
    ts = np.linspace(0.0, T, nq)
    vals = np.empty((nq, A.shape[0], A.shape[0]))
    for j, s in enumerate(ts):
        M = expm(-A * s) @ B
        vals[j] = M @ M.T
    return trapezoid(vals, ts, axis=0)


class TestFundamentalSolution:
    def test_inverse_consistency(self, dbl_int_spec):
        fs = FundamentalSolution(dbl_int_spec, 0.0, 1.0)
        for s in (0.0, 0.4, 1.0):
            np.testing.assert_allclose(fs.phi(s) @ fs.phi_inv(s), np.eye(2),
                                       atol=1e-9)

    def test_scalar_exponential(self, ex1_spec):
        fs = FundamentalSolution(ex1_spec, 0.0, 1.0)
        assert fs.phi(0.7)[0, 0] == pytest.approx(math.exp(0.7), rel=1e-9)


class TestGramian:
    def test_scalar_closed_form(self, ex1_spec):
        # W = integral of e^{-2s} over [0, 1]
        g = controllability_gramian(ex1_spec, 0.0, 1.0)
        assert g.W[0, 0] == pytest.approx((1.0 - math.exp(-2.0)) / 2.0,
                                          abs=1e-9)

    def test_matches_quadrature_randomly(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            n = rng.integers(1, 3)
            m = rng.integers(1, 3)
            A = rng.standard_normal((n, n))
            B = rng.standard_normal((n, m))
            g = controllability_gramian(lti_spec(A, B), 0.0, 1.0)
            np.testing.assert_allclose(g.W, gramian_by_quadrature(A, B),
                                       rtol=1e-5, atol=1e-8)

    def test_subinterval(self, ex1_spec):
        g = controllability_gramian(ex1_spec, 0.3, 0.8)
        exact = (math.exp(-0.6) - math.exp(-1.6)) / 2.0
        assert g.W[0, 0] == pytest.approx(exact, rel=1e-8)

    def test_interval_order_checked(self, ex1_spec):
        with pytest.raises(ValueError):
            controllability_gramian(ex1_spec, 0.8, 0.3)


class TestKalmanRank:
    def test_double_integrator_controllable(self):
        assert kalman_rank([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]]) == 2

    def test_decoupled_state_not_controllable(self):
        assert kalman_rank(np.diag([1.0, 2.0]), [[1.0], [0.0]]) == 1

    def test_zero_input(self):
        assert kalman_rank(np.eye(2), np.zeros((2, 1))) == 0


class TestSteering:
    def test_scalar_miss(self, ex1_spec):
        traj = steering_control(ex1_spec, 0.0, ex1_spec.x)
        assert traj.terminal_miss <= 1e-6

    def test_scalar_energy_is_optimal(self, ex1_spec):
        # for Q = 0 the min-energy control is the cost-optimal one
        traj = steering_control(ex1_spec, 0.0, ex1_spec.x)
        exact = 2.0 * math.e ** 2 / (math.e ** 2 - 1.0)
        assert traj.functionals[0] == pytest.approx(exact, rel=1e-5)

    def test_double_integrator_miss(self, dbl_int_spec):
        traj = steering_control(dbl_int_spec, 0.0, dbl_int_spec.x)
        assert traj.terminal_miss <= 1e-6

    def test_base_point_invariance(self, dbl_int_spec):
        # steering between interior states agrees with a restart mid-course
        ts, X, _ = min_energy_steering(dbl_int_spec, 0.2, 0.9,
                                       np.array([1.0, -0.5]),
                                       np.array([0.0, 0.3]), DEFAULTS)
        assert np.linalg.norm(X[-1] - [0.0, 0.3]) <= 1e-8

    def test_singular_gramian_raises(self):
        spec = lti_spec(np.diag([1.0, 2.0]), [[1.0], [0.0]])
        with pytest.raises(SingularGramian):
            min_energy_steering(spec, 0.0, 1.0, np.array([0.0, 1.0]),
                                np.zeros(2), DEFAULTS)
