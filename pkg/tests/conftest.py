import os
import tempfile

import numpy as np
import pytest

# the service reads its settings on first import, so point it at scratch space first
_SCRATCH = tempfile.mkdtemp(prefix="twostep-tests-")
os.environ["TWOSTEP_DATABASE_URL"] = f"sqlite:///{os.path.join(_SCRATCH, 'test.db')}"
os.environ["TWOSTEP_LOG_DIR"] = os.path.join(_SCRATCH, "logs")

from twostep.problems import get_problem  # noqa: E402
from twostep.quadrature import make_rule  # noqa: E402


def rk4(H, y0, t, n_steps):
    """Classical Runge-Kutta reference, independent of the methods under test."""
    y = np.array(y0, dtype=float)
    dt = t / n_steps
    for _ in range(n_steps):
        k1 = H.vector_field(y)
        k2 = H.vector_field(y + 0.5 * dt * k1)
        k3 = H.vector_field(y + 0.5 * dt * k2)
        k4 = H.vector_field(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


@pytest.fixture
def reference():
    return rk4


@pytest.fixture
def pendulum():
    return get_problem("pendulum3")


@pytest.fixture
def fhp():
    return get_problem("fhp6")


@pytest.fixture
def kepler():
    return get_problem("kepler")


@pytest.fixture
def sho():
    return get_problem("sho")


@pytest.fixture
def lobatto5():
    return make_rule("lobatto", 5)
