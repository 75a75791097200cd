import math

import numpy as np
import pytest

from clq.model import ProblemSpec, QuadraticFunctional, TimeGridMatrixFn


def const(M, T=1.0):
    return TimeGridMatrixFn.constant(M, T)


def scalar_spec(x=1.0, y=0.0, Q0=0.0, R0=1.0, constraints=(), T=1.0):
    """Scalar plant with unit drift and unit input."""
    cons = tuple(
        QuadraticFunctional(const([[qi]], T), const([[ri]], T), bound=ci)
        for qi, ri, ci in constraints)
    return ProblemSpec(1, 1, const([[1.0]], T), const([[1.0]], T), 0.0, T,
                       [x], [y],
                       QuadraticFunctional(const([[Q0]], T), const([[R0]], T)),
                       cons)


@pytest.fixture
def ex1_spec():
    """Minimum-energy steering of the scalar unit-drift plant to the origin."""
    return scalar_spec(x=1.0, y=0.0)


@pytest.fixture
def ex2_spec():
    """Scalar plant, heavy state cost, active control-energy budget."""
    return scalar_spec(x=1.0, y=0.0, Q0=15.0,
                       constraints=((0.0, 1.0, 3.0),))


@pytest.fixture
def dbl_int_spec():
    """Double integrator steered from rest at 1 to the origin."""
    T = 1.0
    A = const([[0.0, 1.0], [0.0, 0.0]], T)
    B = const([[0.0], [1.0]], T)
    cost = QuadraticFunctional(const(np.zeros((2, 2)), T), const([[1.0]], T))
    return ProblemSpec(2, 1, A, B, 0.0, T, [1.0, 0.0], [0.0, 0.0], cost)


# closed forms for the scalar unit-drift plant with Q = 0, R = 1, T = 1

E2 = math.e ** 2


def p_exact(s):
    return 2.0 / (1.0 - math.exp(2.0 * (s - 1.0)))


def pi_exact(s):
    return 2.0 / (math.exp(2.0 * s) - 1.0)


def phi_exact(s):
    return (math.exp(2.0 - s) - math.exp(s)) / (E2 - 1.0)


def psi_exact(s):
    return 2.0 * math.exp(2.0 - s) / (E2 - 1.0)


def j_exact(x, y):
    return 2.0 * (math.e * x - y) ** 2 / (E2 - 1.0)


def u_exact(s, x, y):
    return 2.0 * math.exp(1.0 - s) * (math.e * x - y) / (1.0 - E2)
