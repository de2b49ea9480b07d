import numpy as np
import pytest

from spseries import QuadraticSystem


@pytest.fixture
def system_2x2_int():
    """Integer-coefficient 2x2 example with equilibrium (1, 2) and
    eigenvalues -2 +- sqrt(2)."""
    return QuadraticSystem(A=[[-2.0, -1.0], [-1.0, -1.0]], b=[4.0, 3.0])


@pytest.fixture
def system_2x2_close():
    """2x2 example with nearby eigenvalues (~-1.359, ~-2.140) and
    equilibrium (2, 1.5)."""
    return QuadraticSystem(A=[[-1.0, -0.3], [-0.1, -1.0]], b=[2.45, 1.7])


@pytest.fixture
def system_3x3():
    """3x3 example; leading 2x2 block doubles as the reduction target."""
    return QuadraticSystem(
        A=[[-2.0, -0.3, -0.1], [-0.2, -2.0, -0.1], [-0.1, -0.4, -2.0]],
        b=[2.0, 2.5, 3.0])


@pytest.fixture
def decoupled_pair():
    """Two independent logistic equations (r, k) = (1, 1) and (sqrt(2), 1)."""
    return QuadraticSystem(A=np.diag([-1.0, -np.sqrt(2.0)]),
                           b=[1.0, np.sqrt(2.0)])
