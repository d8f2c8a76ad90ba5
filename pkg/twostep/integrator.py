"""
Two-step energy-preserving integrators and their companions.

M_k      y2 = y0 + 2hJ sum_i b_i grad H(gamma(c_i)) + G(y0, y1, y2)
M'_k     the same without the correction G (a generalized linear two-step method)
HBVM-4   the order-four one-step method used to produce y1 from y0
trap-k   the k-stage trapezoidal method, order two

gamma is the quadratic curve through y0, y1, y2 at tau = 0, 1/2, 1 and the
quadrature rule (c_i, b_i) lives on [0, 1]. All implicit equations are solved
by fixed-point iteration; the stopping test uses the max-norm of successive
iterates, the method formulas use the Euclidean norm.
"""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from .errors import DegenerateGradient, FixedPointDivergence, TwoStepError
from .hamiltonian import HamiltonianSystem, apply_j, as_state
from .interpolant import QuadraticCurve, weight_matrix
from .quadrature import QuadratureRule

logger = logging.getLogger(__name__)

# free constants of the order-four HBVM over an interval of length 2h
ETA1 = 2.0
ETA2 = 3.0
BLOWUP_FACTOR = 1e6


class MethodKind(str, Enum):
    MK = "mk"
    MK_LINEAR = "mk-lin"
    HBVM4 = "hbvm4"
    TRAPEZOIDAL_K = "trap"


class Predictor(str, Enum):
    EXTRAPOLATE = "extrapolate"
    LINEAR_METHOD = "linear_method"


class MethodConfig(BaseModel):
    """Method kind, quadrature rule and fixed-point controls."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: MethodKind = MethodKind.MK
    rule: QuadratureRule
    fp_tol: float = 1e-14
    fp_max_iter: int = 200
    predictor: Predictor = Predictor.EXTRAPOLATE
    drift_correct: bool = False
    a_norm_floor: float = 1e-14

    @field_validator("fp_tol", "a_norm_floor")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be positive")
        return value

    @field_validator("fp_max_iter")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @property
    def label(self) -> str:
        label = f"{self.kind.value}:{self.rule.family.value}:{self.rule.k}"
        return f"{label}:dc" if self.drift_correct else label


@dataclass(frozen=True)
class StepRecord:
    t: float
    y: np.ndarray = field(repr=False)
    energy_error: float
    residual: float = 0.0
    fp_iterations: int = 0
    correction_norm: float = 0.0
    # sum b_i grad H(gamma(c_i)) . gamma'(c_i) over the accepted curve, before drift correction
    line_integral: float = 0.0
    warning: Optional[str] = None


@dataclass
class Trajectory:
    hamiltonian: str
    config: MethodConfig
    h: float
    energy0: float
    records: List[StepRecord]
    wall_time: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def states(self) -> np.ndarray:
        return np.stack([r.y for r in self.records])

    @property
    def energy_errors(self) -> np.ndarray:
        return np.array([r.energy_error for r in self.records])

    @property
    def max_energy_error(self) -> float:
        return float(np.max(np.abs(self.energy_errors)))

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    @property
    def total_iterations(self) -> int:
        return sum(r.fp_iterations for r in self.records)


@dataclass(frozen=True, eq=False)
class _Stencil:
    weights: np.ndarray    # (k, 3) basis weights of y0, y1, z at each node
    b: np.ndarray          # quadrature weights
    s: np.ndarray          # b_i (2 c_i - 1)
    frozen: np.ndarray     # nodes where gamma does not depend on z
    moving: np.ndarray


@lru_cache(maxsize=None)
def _stencil(rule: QuadratureRule) -> _Stencil:
    weights = weight_matrix(rule.nodes)
    frozen = weights[:, 2] == 0.0
    return _Stencil(weights=weights, b=rule.weights, s=rule.weights * (2.0 * rule.nodes - 1.0),
                    frozen=frozen, moving=~frozen)


class _LineIntegrals:
    """Quadrature sums along the curve through (y0, y1, z) for a fixed pair (y0, y1).

    Gradients at the nodes where gamma equals y0 or y1 are evaluated once and
    reused on every fixed-point sweep.
    """

    def __init__(self, H: HamiltonianSystem, rule: QuadratureRule, y0: np.ndarray, y1: np.ndarray):
        self.H = H
        self.st = _stencil(rule)
        self.base = self.st.weights[:, :2] @ np.stack((y0, y1))
        self.grads = np.empty_like(self.base)
        if self.st.frozen.any():
            self.grads[self.st.frozen] = H.gradient(self.base[self.st.frozen])
        self._w2 = self.st.weights[self.st.moving, 2:3]
        self._base_moving = self.base[self.st.moving]

    def sums(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Return (sum b_i grad H(gamma(c_i)), sum b_i (2c_i - 1) grad H(gamma(c_i)))."""
        self.grads[self.st.moving] = self.H.gradient(self._base_moving + self._w2 * z)
        return self.st.b @ self.grads, self.st.s @ self.grads


def _curve_sums(H: HamiltonianSystem, rule: QuadratureRule, curve: QuadraticCurve):
    st = _stencil(rule)
    grads = H.gradient(curve.at(st.weights))
    return st.b @ grads, st.s @ grads


def _line_integral(b: np.ndarray, grads: np.ndarray, curve: QuadraticCurve, nodes: np.ndarray) -> float:
    return float(b @ np.einsum("ij,ij->i", grads, curve.derivative(nodes)))


def _residual(q: np.ndarray, second_difference: np.ndarray) -> float:
    return -2.0 * float(second_difference @ q)


def _correction(a: np.ndarray, r: float, floor: float) -> np.ndarray:
    norm2 = float(a @ a)
    norm = np.sqrt(norm2)
    if norm < floor:
        raise DegenerateGradient(norm, floor)
    return (r / norm2) * a


def a_of_z(H: HamiltonianSystem, rule: QuadratureRule, curve: QuadraticCurve) -> np.ndarray:
    """Discrete average of grad H along the curve."""
    a, _ = _curve_sums(H, rule, curve)
    return a


def residual_r(H: HamiltonianSystem, rule: QuadratureRule, curve: QuadraticCurve) -> float:
    """Failure of the second orthogonality condition at the curve's endpoint z."""
    _, q = _curve_sums(H, rule, curve)
    return _residual(q, curve.z - 2.0 * curve.y1 + curve.y0)


def correction_g(H: HamiltonianSystem, rule: QuadratureRule, curve: QuadraticCurve,
                 floor: float = 1e-14) -> np.ndarray:
    """The O(h^5) correction term that turns M'_k into the energy-preserving M_k."""
    a, q = _curve_sums(H, rule, curve)
    return _correction(a, _residual(q, curve.z - 2.0 * curve.y1 + curve.y0), floor)


def _max_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v)))


def _check_iterate(z: np.ndarray, limit: float, iteration: int, increment: float):
    if not np.all(np.isfinite(z)) or np.linalg.norm(z) > limit:
        raise FixedPointDivergence(
            f"fixed-point iterate blew up after {iteration} sweeps", iteration, increment
        )


def _solve_two_step(H, cfg: MethodConfig, y0, y1, h, corrected: bool, z0: np.ndarray,
                    trace: Optional[List[float]] = None):
    integrals = _LineIntegrals(H, cfg.rule, y0, y1)
    tol = cfg.fp_tol * (1.0 + _max_norm(y0))
    limit = BLOWUP_FACTOR * (1.0 + np.linalg.norm(y0))
    z = z0
    increment = np.inf
    degenerate = False
    for iteration in range(1, cfg.fp_max_iter + 1):
        a, q = integrals.sums(z)
        z_new = y0 + 2.0 * h * apply_j(a)
        if corrected:
            try:
                z_new = z_new + _correction(a, _residual(q, z - 2.0 * y1 + y0), cfg.a_norm_floor)
                degenerate = False
            except DegenerateGradient:
                degenerate = True
        increment = _max_norm(z_new - z)
        _check_iterate(z_new, limit, iteration, increment)
        z = z_new
        if trace is not None:
            trace.append(increment)
        if increment <= tol:
            return z, iteration, degenerate, integrals
    raise FixedPointDivergence(
        f"fixed-point iteration did not converge in {cfg.fp_max_iter} sweeps "
        f"(last increment {increment:.3e}, h={h})", cfg.fp_max_iter, increment
    )


def line_integral(H: HamiltonianSystem, rule: QuadratureRule, curve: QuadraticCurve) -> float:
    """Quadrature value of the work of grad H along the curve, approximating H(z) - H(y0).

    Exact when H is a polynomial of degree nu and the rule has degree of precision
    at least 2nu - 1; zero up to solver tolerance at an accepted M_k point.
    """
    grads = H.gradient(curve.at(_stencil(rule).weights))
    return _line_integral(rule.weights, grads, curve, rule.nodes)


def drift_correct(H: HamiltonianSystem, y, H0: float, floor: float = 1e-14) -> np.ndarray:
    """One gradient-descent step pulling y back towards the level set H = H0."""
    y = np.asarray(y, dtype=float)
    g = H.gradient(y)
    norm = float(np.linalg.norm(g))
    if norm < floor:
        raise DegenerateGradient(norm, floor)
    alpha = (H.energy(y) - H0) / norm
    return y - alpha * g / norm


def _finish_point(H, cfg: MethodConfig, y: np.ndarray, H0: float) -> Tuple[np.ndarray, Optional[str]]:
    if not cfg.drift_correct:
        return y, None
    try:
        return drift_correct(H, y, H0, cfg.a_norm_floor), None
    except DegenerateGradient as exc:
        logger.warning(f"drift correction skipped: {exc}")
        return y, "drift-correction-skipped"


def _two_step(H, cfg: MethodConfig, y0, y1, h, corrected: bool, t: Optional[float], H0: Optional[float],
              z0: Optional[np.ndarray], trace: Optional[List[float]]):
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    if y0.shape != y1.shape or y0.shape != (2 * H.dim_m,):
        raise ValueError(f"y0 and y1 must both have length {2 * H.dim_m}")
    if not h > 0:
        raise ValueError(f"stepsize must be positive, got {h}")
    H0 = H.energy(y0) if H0 is None else H0
    t = 2.0 * h if t is None else t

    iterations = 0
    if z0 is None:
        z0 = 2.0 * y1 - y0
        if corrected and cfg.predictor is Predictor.LINEAR_METHOD:
            z0, iterations, _, _ = _solve_two_step(H, cfg, y0, y1, h, False, z0)

    z, used, degenerate, integrals = _solve_two_step(H, cfg, y0, y1, h, corrected, z0, trace)
    iterations += used

    # diagnostics at the accepted point
    a, q = integrals.sums(z)
    residual = _residual(q, z - 2.0 * y1 + y0)
    correction_norm = 0.0
    warning = None
    if degenerate:
        logger.warning(f"averaged gradient below {cfg.a_norm_floor:.1e} at t={t}; step taken without correction")
        warning = "degenerate-gradient"
    elif corrected:
        correction_norm = float(np.linalg.norm((residual / float(a @ a)) * a))
    work = _line_integral(integrals.st.b, integrals.grads, QuadraticCurve(y0, y1, z), cfg.rule.nodes)

    y2, drift_warning = _finish_point(H, cfg, z, H0)
    record = StepRecord(t=t, y=y2, energy_error=float(H.energy(y2) - H0), residual=residual,
                        fp_iterations=iterations, correction_norm=correction_norm,
                        line_integral=work, warning=warning or drift_warning)
    return y2, record


def step_mk(H: HamiltonianSystem, cfg: MethodConfig, y0, y1, h: float, *, t: Optional[float] = None,
            H0: Optional[float] = None, z0: Optional[np.ndarray] = None,
            trace: Optional[List[float]] = None) -> Tuple[np.ndarray, StepRecord]:
    """Advance (y0, y1) to y2 with the corrected method M_k.

    t and H0 label the record (defaults: 2h and H(y0)); trace, when given,
    collects the max-norm increments of the fixed-point sweeps.
    """
    return _two_step(H, cfg, y0, y1, h, True, t, H0, z0, trace)


def step_mk_linear(H: HamiltonianSystem, cfg: MethodConfig, y0, y1, h: float, *, t: Optional[float] = None,
                   H0: Optional[float] = None, z0: Optional[np.ndarray] = None,
                   trace: Optional[List[float]] = None) -> Tuple[np.ndarray, StepRecord]:
    """Advance (y0, y1) to y2 with the linear part M'_k (no correction)."""
    return _two_step(H, cfg, y0, y1, h, False, t, H0, z0, trace)


def _solve_hbvm4(H, rule: QuadratureRule, y0: np.ndarray, h: float, fp_tol: float, fp_max_iter: int):
    st = _stencil(rule)
    f0 = apply_j(H.gradient(y0))
    u1 = y0 + h * f0
    u2 = y0 + 2.0 * h * f0
    tol = fp_tol * (1.0 + _max_norm(y0))
    limit = BLOWUP_FACTOR * (1.0 + np.linalg.norm(y0))
    increment = np.inf
    for iteration in range(1, fp_max_iter + 1):
        grads = H.gradient(st.weights @ np.stack((y0, u1, u2)))
        a = st.b @ grads
        q = st.s @ grads
        u2_new = y0 + ETA1 * h * apply_j(a)
        u1_new = 0.5 * (u2_new + y0 - ETA2 * h * apply_j(q))
        increment = max(_max_norm(u1_new - u1), _max_norm(u2_new - u2))
        _check_iterate(u2_new, limit, iteration, increment)
        u1, u2 = u1_new, u2_new
        if increment <= tol:
            return u1, u2, iteration
    raise FixedPointDivergence(
        f"HBVM-4 block iteration did not converge in {fp_max_iter} sweeps "
        f"(last increment {increment:.3e}, h={h})", fp_max_iter, increment
    )


def step_hbvm4(H: HamiltonianSystem, rule: QuadratureRule, y0, h: float, *, fp_tol: float = 1e-14,
               fp_max_iter: int = 200) -> Tuple[np.ndarray, np.ndarray]:
    """One step of the order-four HBVM over [t0, t0 + 2h].

    Returns the internal stage u1 ~ y(t0 + h) and the endpoint u2 ~ y(t0 + 2h).
    """
    if not h > 0:
        raise ValueError(f"stepsize must be positive, got {h}")
    u1, u2, _ = _solve_hbvm4(H, rule, np.asarray(y0, dtype=float), h, fp_tol, fp_max_iter)
    return u1, u2


def _solve_trapezoidal(H, rule: QuadratureRule, y0: np.ndarray, h: float, fp_tol: float, fp_max_iter: int):
    c = rule.nodes[:, None]
    y1 = y0 + h * apply_j(H.gradient(y0))
    tol = fp_tol * (1.0 + _max_norm(y0))
    limit = BLOWUP_FACTOR * (1.0 + np.linalg.norm(y0))
    increment = np.inf
    for iteration in range(1, fp_max_iter + 1):
        stages = (1.0 - c) * y0 + c * y1
        y1_new = y0 + h * apply_j(rule.weights @ H.gradient(stages))
        increment = _max_norm(y1_new - y1)
        _check_iterate(y1_new, limit, iteration, increment)
        y1 = y1_new
        if increment <= tol:
            return y1, iteration
    raise FixedPointDivergence(
        f"trapezoidal iteration did not converge in {fp_max_iter} sweeps "
        f"(last increment {increment:.3e}, h={h})", fp_max_iter, increment
    )


def step_trapezoidal_k(H: HamiltonianSystem, rule: QuadratureRule, y0, h: float, *, fp_tol: float = 1e-14,
                       fp_max_iter: int = 200) -> np.ndarray:
    """One step of the k-stage trapezoidal method with silent stages (1 - c_i) y0 + c_i y1."""
    if not h > 0:
        raise ValueError(f"stepsize must be positive, got {h}")
    y1, _ = _solve_trapezoidal(H, rule, np.asarray(y0, dtype=float), h, fp_tol, fp_max_iter)
    return y1


Starter = Union[str, Callable[[float], np.ndarray]]


def _one_step(H, cfg: MethodConfig, y: np.ndarray, h: float) -> Tuple[np.ndarray, int]:
    if cfg.kind is MethodKind.HBVM4:
        _, y_next, iterations = _solve_hbvm4(H, cfg.rule, y, 0.5 * h, cfg.fp_tol, cfg.fp_max_iter)
        return y_next, iterations
    return _solve_trapezoidal(H, cfg.rule, y, h, cfg.fp_tol, cfg.fp_max_iter)


def integrate(H: HamiltonianSystem, cfg: MethodConfig, y0, h: float, n_steps: int,
              starter: Starter = "hbvm4") -> Trajectory:
    """Integrate n_steps steps of size h from t = 0.

    Two-step methods take y1 from one HBVM-4 step of total length h, or from
    starter(h) when a reference solution callable is given; one-step kinds
    (hbvm4, trap) ignore the starter.
    """
    y0 = as_state(y0, H.dim_m)
    if not h > 0:
        raise ValueError(f"stepsize must be positive, got {h}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")

    H0 = float(H.energy(y0))
    records = [StepRecord(t=0.0, y=y0, energy_error=0.0)]
    logger.info(f"integrating {H.name} with {cfg.label}, h={h}, {n_steps} steps")
    started = time.perf_counter()

    n = 1
    try:
        # one-step kinds
        if cfg.kind in (MethodKind.HBVM4, MethodKind.TRAPEZOIDAL_K):
            y = y0
            for n in range(1, n_steps + 1):
                y, iterations = _one_step(H, cfg, y, h)
                y, warning = _finish_point(H, cfg, y, H0)
                records.append(StepRecord(t=n * h, y=y, energy_error=float(H.energy(y) - H0),
                                          fp_iterations=iterations, warning=warning))
        else:
            # y1 from the starter, then the two-step recurrence
            if callable(starter):
                y1, iterations = as_state(starter(h), H.dim_m), 0
            elif starter == "hbvm4":
                _, y1, iterations = _solve_hbvm4(H, cfg.rule, y0, 0.5 * h, cfg.fp_tol, cfg.fp_max_iter)
            else:
                raise ValueError(f"unknown starter {starter!r}")
            y1, warning = _finish_point(H, cfg, y1, H0)
            records.append(StepRecord(t=h, y=y1, energy_error=float(H.energy(y1) - H0),
                                      fp_iterations=iterations, warning=warning))

            step = step_mk if cfg.kind is MethodKind.MK else step_mk_linear
            for n in range(2, n_steps + 1):
                _, record = step(H, cfg, records[-2].y, records[-1].y, h, t=n * h, H0=H0)
                records.append(record)
    except TwoStepError as exc:
        exc.step_index = n
        logger.error(f"integration of {H.name} with {cfg.label} failed: {exc}")
        raise

    trajectory = Trajectory(hamiltonian=H.name, config=cfg, h=h, energy0=H0, records=records,
                            wall_time=time.perf_counter() - started)
    logger.info(
        f"finished {H.name} with {cfg.label}: max |H - H0| = {trajectory.max_energy_error:.3e}, "
        f"{trajectory.total_iterations} sweeps in {trajectory.wall_time:.2f}s"
    )
    return trajectory
