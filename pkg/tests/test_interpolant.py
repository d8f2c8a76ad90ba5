import numpy as np
import numpy.testing as npt
import pytest

from twostep.errors import DimensionMismatch
from twostep.interpolant import QuadraticCurve, basis_weights, weight_matrix


@pytest.fixture
def curve():
    return QuadraticCurve(np.array([0.0, 1.0]), np.array([0.4, 0.8]), np.array([0.7, 0.3]))


def test_basis_weights_at_the_interpolation_points():
    assert basis_weights(0.0) == (1.0, 0.0, 0.0)
    assert basis_weights(0.5) == (0.0, 1.0, 0.0)
    assert basis_weights(1.0) == (0.0, 0.0, 1.0)


def test_weights_sum_to_one():
    c = np.linspace(-0.5, 1.5, 21)
    npt.assert_allclose(weight_matrix(c).sum(axis=-1), 1.0, atol=1e-14)
    assert weight_matrix(c).shape == (21, 3)


def test_curve_interpolates(curve):
    npt.assert_array_equal(curve.eval(0.0), curve.y0)
    npt.assert_array_equal(curve.eval(0.5), curve.y1)
    npt.assert_array_equal(curve.eval(1.0), curve.z)


def test_newton_form_agrees(curve):
    tau = np.linspace(0.0, 1.0, 11)
    npt.assert_allclose(curve.newton_form(tau), curve.eval(tau), atol=1e-15)


def test_derivative_matches_finite_differences(curve):
    step = 1e-6
    for tau in (0.0, 0.3, 0.5, 1.0):
        fd = (curve.eval(tau + step) - curve.eval(tau - step)) / (2 * step)
        npt.assert_allclose(curve.derivative(tau), fd, atol=1e-9)


def test_curve_is_exact_on_quadratics():
    # samples of a quadratic path are reproduced everywhere
    def path(t):
        return np.array([1.0 + 2.0 * t - 3.0 * t * t, -t * t])

    curve = QuadraticCurve(path(0.0), path(0.5), path(1.0))
    for tau in (0.1, 0.25, 0.9):
        npt.assert_allclose(curve.eval(tau), path(tau), atol=1e-15)


def test_batched_points(curve):
    c = np.array([0.0, 0.25, 1.0])
    npt.assert_allclose(curve.at(weight_matrix(c)), curve.eval(c))


def test_mismatched_shapes():
    with pytest.raises(DimensionMismatch):
        QuadraticCurve(np.zeros(2), np.zeros(2), np.zeros(4))
