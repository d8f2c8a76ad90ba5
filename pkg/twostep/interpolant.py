"""
The quadratic curve through (y0, y1, z) on tau = 0, 1/2, 1.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


def weight_matrix(c) -> np.ndarray:
    """Basis weights for every abscissa in c, shape c.shape + (3,)."""
    c = np.asarray(c, dtype=float)
    return np.stack((1.0 - 3.0 * c + 2.0 * c * c, 4.0 * c * (1.0 - c), c * (2.0 * c - 1.0)), axis=-1)


def basis_weights(c: float):
    """Weights (w0, w1, w2) with gamma(c) = w0*y0 + w1*y1 + w2*z."""
    w0, w1, w2 = weight_matrix(float(c))
    return float(w0), float(w1), float(w2)


@dataclass(frozen=True)
class QuadraticCurve:
    y0: np.ndarray
    y1: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.y0), np.shape(self.y1), np.shape(self.z)}
        if len(shapes) != 1:
            raise DimensionMismatch(f"curve data have mismatched shapes {sorted(shapes)}")

    @property
    def data(self) -> np.ndarray:
        return np.stack((self.y0, self.y1, self.z))

    def eval(self, tau) -> np.ndarray:
        # tau outside [0, 1] extrapolates; handy for diagnostics
        return weight_matrix(tau) @ self.data

    def at(self, weights: np.ndarray) -> np.ndarray:
        """Points for precomputed basis weights of shape (k, 3)."""
        return weights @ self.data

    def derivative(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        second = self.z - 2.0 * self.y1 + self.y0
        return (self.z - self.y0) + 2.0 * np.multiply.outer(2.0 * tau - 1.0, second)

    def newton_form(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return (self.y0 + np.multiply.outer(tau, self.z - self.y0)
                + 2.0 * np.multiply.outer(tau * (tau - 1.0), self.z - 2.0 * self.y1 + self.y0))
