"""
Quadrature rules on [0, 1] for the discrete line integrals.

Gauss nodes come from numpy's Legendre module; Lobatto interior nodes are the
roots of P'_{k-1}, polished by Newton's method, with the classical closed-form
weights. Uniform (Newton-Cotes) weights solve the moment system. Every rule is
symmetrised about 1/2 so that c_i + c_{k+1-i} = 1 and b_i = b_{k+1-i} hold up
to rounding.
"""
import logging
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre as leg

from .errors import MissingPolynomialDegree, UnsupportedRule

logger = logging.getLogger(__name__)

MAX_NODES = 15
MAX_UNIFORM_NODES = 9
NEWTON_TOL = 1e-15
NEWTON_MAX_ITER = 100


class QuadratureFamily(str, Enum):
    LOBATTO = "lobatto"
    GAUSS = "gauss"
    UNIFORM = "uniform"


class QuadratureRule:
    """Nodes and weights on [0, 1] with their declared degree of precision.

    Instances are immutable and compared by identity; make_rule hands out
    one shared instance per (family, k).
    """
    __slots__ = ("family", "k", "nodes", "weights", "degree")

    def __init__(self, family: QuadratureFamily, k: int, nodes: np.ndarray, weights: np.ndarray, degree: int):
        for name, value in (("family", QuadratureFamily(family)), ("k", int(k)), ("nodes", nodes),
                            ("weights", weights), ("degree", int(degree))):
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("QuadratureRule is immutable")

    def __repr__(self):
        return f"QuadratureRule(family={self.family.value!r}, k={self.k}, degree={self.degree})"

    def integrate(self, f: Callable[[float], np.ndarray]) -> np.ndarray:
        return integrate(self, f)

    @property
    def label(self) -> str:
        return f"{self.family.value}-{self.k}"


def degree_of_precision(family: QuadratureFamily, k: int) -> int:
    family = QuadratureFamily(family)
    if family is QuadratureFamily.LOBATTO:
        return 2 * k - 3
    if family is QuadratureFamily.GAUSS:
        return 2 * k - 1
    return k - 1 if k % 2 == 0 else k


def _check_supported(family: QuadratureFamily, k: int):
    low = 1 if family is QuadratureFamily.GAUSS else 2
    high = MAX_UNIFORM_NODES if family is QuadratureFamily.UNIFORM else MAX_NODES
    if not low <= k <= high:
        raise UnsupportedRule(f"{family.value} rules are available for {low} <= k <= {high}, got k={k}")


def _gauss(k: int):
    x, w = leg.leggauss(k)
    return x, w


def _lobatto(k: int):
    x = np.empty(k)
    x[0], x[-1] = -1.0, 1.0
    pk = leg.Legendre.basis(k - 1)
    if k > 2:
        d1 = pk.deriv(1)
        d2 = pk.deriv(2)
        interior = np.sort(d1.roots().real)
        for _ in range(NEWTON_MAX_ITER):
            dx = d1(interior) / d2(interior)
            interior -= dx
            if np.max(np.abs(dx)) < NEWTON_TOL:
                break
        x[1:-1] = interior
    if k % 2:
        x[k // 2] = 0.0
    w = 2.0 / (k * (k - 1) * pk(x) ** 2)
    return x, w


def _uniform(k: int):
    c = np.linspace(0.0, 1.0, k)
    vandermonde = np.vander(c, k, increasing=True)
    moments = 1.0 / np.arange(1, k + 1)
    b = np.linalg.solve(vandermonde.T, moments)
    return 2.0 * c - 1.0, 2.0 * b


def make_rule(family, k: int) -> QuadratureRule:
    """Return the k-node rule of the given family mapped to [0, 1]."""
    family = QuadratureFamily(family)
    _check_supported(family, int(k))
    return _build_rule(family, int(k))


@lru_cache(maxsize=None)
def _build_rule(family: QuadratureFamily, k: int) -> QuadratureRule:
    builder = {
        QuadratureFamily.GAUSS: _gauss,
        QuadratureFamily.LOBATTO: _lobatto,
        QuadratureFamily.UNIFORM: _uniform,
    }[family]
    x, w = builder(k)

    c = 0.5 * (x + 1.0)
    b = 0.5 * w
    c = 0.5 * (c + (1.0 - c[::-1]))
    b = 0.5 * (b + b[::-1])
    if k % 2:
        c[k // 2] = 0.5
    if family is not QuadratureFamily.GAUSS:
        c[0], c[-1] = 0.0, 1.0

    c.setflags(write=False)
    b.setflags(write=False)
    rule = QuadratureRule(family=family, k=k, nodes=c, weights=b, degree=degree_of_precision(family, k))
    logger.debug(f"built quadrature rule {rule.label} with degree of precision {rule.degree}")
    return rule


def integrate(rule: QuadratureRule, f: Callable[[float], np.ndarray]) -> np.ndarray:
    """Sum_i b_i f(c_i)."""
    values = np.array([np.asarray(f(c), dtype=float) for c in rule.nodes])
    return np.tensordot(rule.weights, values, axes=1)


def monomial_error(rule: QuadratureRule, j: int) -> float:
    """Relative error of the rule on tau**j over [0, 1]."""
    exact = 1.0 / (j + 1)
    approx = float(np.dot(rule.weights, rule.nodes ** j))
    return abs(approx - exact) / exact


def verified_degree(rule: QuadratureRule, tol: float = 1e-12) -> int:
    """Largest d such that every monomial up to degree d is integrated within tol."""
    d = -1
    while d + 1 <= 2 * rule.k + 1 and monomial_error(rule, d + 1) <= tol:
        d += 1
    return d


def min_nodes_for_degree(family, d: int) -> int:
    """Smallest k whose rule in the family has degree of precision >= d."""
    family = QuadratureFamily(family)
    low = 1 if family is QuadratureFamily.GAUSS else 2
    high = MAX_UNIFORM_NODES if family is QuadratureFamily.UNIFORM else MAX_NODES
    for k in range(low, high + 1):
        if degree_of_precision(family, k) >= d:
            return k
    raise UnsupportedRule(f"no {family.value} rule with k <= {high} reaches degree of precision {d}")


def required_nodes(family, nu: Optional[int]) -> int:
    """Minimal node count making M_k energy preserving for a degree-nu Hamiltonian (d >= 2nu-1)."""
    if nu is None:
        raise MissingPolynomialDegree("the Hamiltonian is not a polynomial; choose k explicitly")
    if nu < 1:
        raise ValueError(f"polynomial degree must be at least 1, got {nu}")
    return min_nodes_for_degree(family, 2 * nu - 1)
