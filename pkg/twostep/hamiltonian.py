"""
Hamiltonian systems y' = J grad H(y) in canonical form.

States are flat float arrays ordered as y = (q_1..q_m, p_1..p_m). Every
evaluator accepts a single state of shape (2m,) or a batch of states of shape
(..., 2m); the integrators evaluate all quadrature nodes in one call.
"""
import json
import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, InvalidState, MissingPolynomialDegree

logger = logging.getLogger(__name__)

Term = Tuple[float, Tuple[int, ...]]


def as_state(y, dim_m: Optional[int] = None) -> np.ndarray:
    """Validate and copy a phase-space point into a float array of even length."""
    state = np.array(y, dtype=float)
    if state.ndim != 1 or state.size == 0 or state.size % 2:
        raise DimensionMismatch(f"state must be a non-empty vector of even length, got shape {state.shape}")
    if dim_m is not None and state.size != 2 * dim_m:
        raise DimensionMismatch(f"state has length {state.size}, expected {2 * dim_m}")
    if not np.all(np.isfinite(state)):
        raise InvalidState("state contains non-finite entries")
    return state


def apply_j(v) -> np.ndarray:
    """Multiply by the symplectic matrix J = [[0, I], [-I, 0]] along the last axis."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1] if v.ndim else 0
    if n == 0 or n % 2:
        raise DimensionMismatch(f"J needs an even-length vector, got length {n}")
    m = n // 2
    return np.concatenate((v[..., m:], -v[..., :m]), axis=-1)


class HamiltonianSystem(ABC):
    """A smooth energy H(y) together with its gradient."""

    dim_m: int
    name: str

    @property
    def poly_degree(self) -> Optional[int]:
        return None

    @abstractmethod
    def energy(self, y) -> Union[float, np.ndarray]:
        ...

    @abstractmethod
    def gradient(self, y) -> np.ndarray:
        ...

    def vector_field(self, y) -> np.ndarray:
        return apply_j(self.gradient(y))

    def _check_shape(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 0 or y.shape[-1] != 2 * self.dim_m:
            raise DimensionMismatch(
                f"{self.name}: expected states of length {2 * self.dim_m}, got shape {y.shape}"
            )
        return y


class CallbackHamiltonian(HamiltonianSystem):
    """Hamiltonian given by user callbacks for H and grad H.

    The callbacks receive arrays of shape (..., 2m) and must broadcast over
    the leading axes.
    """

    def __init__(self, dim_m: int, energy: Callable, gradient: Callable, name: str = "callback"):
        if dim_m < 1:
            raise DimensionMismatch("dim_m must be at least 1")
        self.dim_m = int(dim_m)
        self.name = name
        self._energy = energy
        self._gradient = gradient

    def energy(self, y):
        y = self._check_shape(y)
        value = np.asarray(self._energy(y), dtype=float)
        return float(value) if value.ndim == 0 else value

    def gradient(self, y):
        y = self._check_shape(y)
        return np.asarray(self._gradient(y), dtype=float)


class PolynomialHamiltonian(HamiltonianSystem):
    """Sparse polynomial in (q, p) stored as exponent-vector -> coefficient.

    Repeated exponent vectors are merged, zero coefficients are dropped and
    the gradient terms are differentiated once here.
    """

    def __init__(self, dim_m: int, terms: Iterable[Tuple[float, Sequence[int]]], name: str = "polynomial"):
        if dim_m < 1:
            raise DimensionMismatch("dim_m must be at least 1")
        self.dim_m = int(dim_m)
        self.name = name

        merged: Dict[Tuple[int, ...], float] = {}
        for coefficient, exponents in terms:
            key = tuple(int(e) for e in exponents)
            if len(key) != 2 * self.dim_m:
                raise DimensionMismatch(f"exponent vector {key} must have length {2 * self.dim_m}")
            if any(e < 0 for e in key):
                raise DimensionMismatch(f"exponent vector {key} has negative entries")
            merged[key] = merged.get(key, 0.0) + float(coefficient)
        self._data = {key: c for key, c in sorted(merged.items()) if c != 0.0}

        n = 2 * self.dim_m
        self._exponents = np.array(list(self._data.keys()), dtype=float).reshape(-1, n)
        self._coefficients = np.array(list(self._data.values()), dtype=float)
        self._degree = int(self._exponents.sum(axis=1).max()) if self._data else 0

        grad_exponents: List[np.ndarray] = []
        grad_coefficients: List[float] = []
        grad_variable: List[int] = []
        for key, c in self._data.items():
            for j, e in enumerate(key):
                if e == 0:
                    continue
                lowered = np.array(key, dtype=float)
                lowered[j] -= 1
                grad_exponents.append(lowered)
                grad_coefficients.append(c * e)
                grad_variable.append(j)
        self._grad_exponents = np.array(grad_exponents, dtype=float).reshape(-1, n)
        self._grad_coefficients = np.array(grad_coefficients, dtype=float)
        # one-hot scatter of each derivative term onto its gradient component
        self._grad_scatter = np.zeros((len(grad_variable), n))
        self._grad_scatter[np.arange(len(grad_variable)), grad_variable] = 1.0

    @classmethod
    def from_json(cls, source: Union[str, list], name: str = "user") -> "PolynomialHamiltonian":
        """Build from a JSON list of [coefficient, [exponents...]] pairs."""
        raw = json.loads(source) if isinstance(source, str) else source
        if not raw:
            raise DimensionMismatch("a JSON polynomial needs at least one term to fix its dimension")
        terms = [(float(c), tuple(e)) for c, e in raw]
        n = len(terms[0][1])
        if n % 2:
            raise DimensionMismatch(f"exponent vectors must have even length, got {n}")
        return cls(n // 2, terms, name=name)

    def to_json(self) -> str:
        return json.dumps([[c, list(key)] for key, c in self._data.items()])

    @property
    def terms(self) -> List[Term]:
        return [(c, key) for key, c in self._data.items()]

    @property
    def degree(self) -> int:
        return self._degree

    @property
    def poly_degree(self) -> Optional[int]:
        return self._degree

    def energy(self, y):
        y = self._check_shape(y)
        monomials = np.prod(y[..., None, :] ** self._exponents, axis=-1)
        value = monomials @ self._coefficients
        return float(value) if np.ndim(value) == 0 else value

    def gradient(self, y):
        y = self._check_shape(y)
        monomials = np.prod(y[..., None, :] ** self._grad_exponents, axis=-1)
        return (monomials * self._grad_coefficients) @ self._grad_scatter

    def energy_horner(self, y) -> float:
        """Evaluate a single point by nested Horner schemes, one variable at a time."""
        y = self._check_shape(y)
        if y.ndim != 1:
            raise DimensionMismatch("energy_horner evaluates one state at a time")
        return _horner(dict(self._data), y, 0)

    def __add__(self, other: "PolynomialHamiltonian") -> "PolynomialHamiltonian":
        if not isinstance(other, PolynomialHamiltonian):
            return NotImplemented
        if other.dim_m != self.dim_m:
            raise DimensionMismatch("cannot add Hamiltonians of different dimension")
        return PolynomialHamiltonian(self.dim_m, self.terms + other.terms, name=f"{self.name}+{other.name}")

    def __repr__(self):
        return f"PolynomialHamiltonian(name={self.name!r}, dim_m={self.dim_m}, degree={self._degree}, terms={len(self._data)})"


def _horner(terms: Dict[Tuple[int, ...], float], y: np.ndarray, var: int) -> float:
    if not terms:
        return 0.0
    if var == y.size:
        return sum(terms.values())
    groups: Dict[int, Dict[Tuple[int, ...], float]] = {}
    for key, c in terms.items():
        groups.setdefault(key[0], {})[key[1:]] = c
    acc = 0.0
    for e in range(max(groups), -1, -1):
        acc = acc * y[var]
        if e in groups:
            acc += _horner(groups[e], y, var + 1)
    return acc


def eval_h(H: HamiltonianSystem, y) -> float:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != 2 * H.dim_m:
        raise DimensionMismatch(f"expected a state of length {2 * H.dim_m}, got shape {y.shape}")
    return float(H.energy(y))


def eval_grad(H: HamiltonianSystem, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != 2 * H.dim_m:
        raise DimensionMismatch(f"expected a state of length {2 * H.dim_m}, got shape {y.shape}")
    return H.gradient(y)


def degree(H: HamiltonianSystem) -> int:
    if H.poly_degree is None:
        raise MissingPolynomialDegree(f"{H.name} is not a polynomial Hamiltonian")
    return H.poly_degree


def finite_difference_gradient(H: HamiltonianSystem, y, step: float = 1e-6) -> np.ndarray:
    """Central differences of H at a single state."""
    y = np.asarray(y, dtype=float)
    shifts = step * np.eye(y.size)
    forward = H.energy(y + shifts)
    backward = H.energy(y - shifts)
    return (np.asarray(forward) - np.asarray(backward)) / (2.0 * step)


def check_gradient(H: HamiltonianSystem, points, step: float = 1e-6) -> float:
    """Largest componentwise gap between grad H and central differences over the points."""
    worst = 0.0
    for y in np.atleast_2d(np.asarray(points, dtype=float)):
        gap = np.max(np.abs(H.gradient(y) - finite_difference_gradient(H, y, step)))
        worst = max(worst, float(gap))
    logger.debug(f"gradient check for {H.name}: worst gap {worst:.3e}")
    return worst
