"""
Experiment drivers: single runs, convergence studies and energy-drift comparisons.
"""
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..errors import TwoStepError
from ..integrator import MethodConfig, MethodKind, Trajectory, integrate
from ..problems import ProblemSpec
from ..quadrature import QuadratureFamily, make_rule, required_nodes
from .reports import ConvergenceReport, ConvergenceRow, DriftReport, DriftSeries

logger = logging.getLogger(__name__)

ERROR_METRIC = "euclidean norm of y_N - y_ref(t_end), divided by |y_ref| when |y_ref| > 1"
NON_POLYNOMIAL_NODES = 9


def estimate_order(err_coarse: Optional[float], err_fine: Optional[float]) -> Optional[float]:
    """log2(err(h) / err(h/2)); None when either error is missing or not positive."""
    if err_coarse is None or err_fine is None or not err_coarse > 0 or not err_fine > 0:
        return None
    return math.log2(err_coarse / err_fine)


def steps_for(t_end: float, h: float, exact: bool = True) -> int:
    """Number of steps of size h reaching t_end; with exact=False the grid stops at the last point <= t_end."""
    if not h > 0:
        raise ValueError(f"stepsize must be positive, got {h}")
    n = int(round(t_end / h))
    if abs(n * h - t_end) > 1e-9 * max(1.0, abs(t_end)):
        if exact:
            raise ValueError(f"t_end={t_end} is not an integer multiple of h={h}")
        n = int(math.floor(t_end / h))
    if n < 1:
        raise ValueError(f"t_end={t_end} is shorter than one step of size {h}")
    return n


def default_nodes(problem: ProblemSpec, family) -> int:
    """Smallest energy-preserving k for polynomial problems, otherwise nine."""
    if problem.poly_degree is None:
        return NON_POLYNOMIAL_NODES
    return required_nodes(family, max(problem.poly_degree, 1))


def build_config(problem: ProblemSpec, method="mk", family="lobatto", k: Optional[int] = None,
                 **controls) -> MethodConfig:
    family = QuadratureFamily(family)
    k = default_nodes(problem, family) if k is None else k
    return MethodConfig(kind=MethodKind(method), rule=make_rule(family, k), **controls)


def run_integration(problem: ProblemSpec, config: MethodConfig, h: float, t_end: Optional[float] = None) -> Trajectory:
    t_end = problem.default_interval if t_end is None else t_end
    return integrate(problem.hamiltonian, config, problem.y0, h, steps_for(t_end, h, exact=False))


def _check_halving(h_list: Sequence[float]):
    if not h_list:
        raise ValueError("h_list is empty")
    for coarse, fine in zip(h_list, h_list[1:]):
        if not math.isclose(fine, coarse / 2.0, rel_tol=1e-12):
            raise ValueError(f"h_list must halve at every entry, got {coarse} then {fine}")


def _reference_config(problem: ProblemSpec, config: MethodConfig) -> MethodConfig:
    if problem.poly_degree is not None or config.rule.k >= NON_POLYNOMIAL_NODES:
        return config
    return config.model_copy(update={"rule": make_rule(QuadratureFamily.LOBATTO, NON_POLYNOMIAL_NODES)})


def reference_state(problem: ProblemSpec, config: MethodConfig, h_ref: float, t_end: float):
    """y_ref(t_end) and a label saying where it came from."""
    if problem.reference_solution is not None:
        return np.asarray(problem.reference_solution(t_end), dtype=float), "exact solution"
    trajectory = run_integration(problem, _reference_config(problem, config), h_ref, t_end)
    return trajectory.final.y, f"self-reference run, h={h_ref!r}"


def _error(y: np.ndarray, y_ref: np.ndarray) -> float:
    scale = float(np.linalg.norm(y_ref))
    error = float(np.linalg.norm(y - y_ref))
    return error / scale if scale > 1.0 else error


def _run_cell(problem: ProblemSpec, config: MethodConfig, h: float, t_end: float, y_ref: np.ndarray) -> ConvergenceRow:
    n_steps = steps_for(t_end, h)
    try:
        trajectory = integrate(problem.hamiltonian, config, problem.y0, h, n_steps)
    except TwoStepError as exc:
        logger.error(f"convergence cell h={h} failed: {exc}")
        return ConvergenceRow(h=h, n_steps=n_steps, failure=f"{type(exc).__name__}: {exc}")
    return ConvergenceRow(
        h=h,
        n_steps=n_steps,
        final_error=_error(trajectory.final.y, y_ref),
        max_energy_error=trajectory.max_energy_error,
        final_residual=trajectory.final.residual,
        fp_iterations=trajectory.total_iterations,
    )


def run_convergence(problem: ProblemSpec, config: MethodConfig, h_list: Sequence[float], t_end: float, *,
                    reference_factor: int = 8, max_workers: int = 1) -> ConvergenceReport:
    """Error, order, energy error and residual for a halving sequence of stepsizes.

    The reference is the problem's exact solution when it has one, otherwise a
    run of the same method at min(h_list) / reference_factor.
    """
    h_list = [float(h) for h in h_list]
    _check_halving(h_list)
    for h in h_list:
        steps_for(t_end, h)

    y_ref, reference = reference_state(problem, config, min(h_list) / reference_factor, t_end)
    logger.info(f"convergence study of {problem.name} with {config.label} over {len(h_list)} stepsizes")

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda h: _run_cell(problem, config, h, t_end, y_ref), h_list))
    else:
        rows = [_run_cell(problem, config, h, t_end, y_ref) for h in h_list]

    for previous, row in zip(rows, rows[1:]):
        row.order_estimate = estimate_order(previous.final_error, row.final_error)
        if previous.final_residual is not None and row.final_residual is not None:
            row.residual_order = estimate_order(abs(previous.final_residual), abs(row.final_residual))

    return ConvergenceReport(problem=problem.name, method=config.label, t_end=t_end,
                             error_metric=ERROR_METRIC, reference=reference, rows=rows)


def run_drift(problem: ProblemSpec, configs: Mapping[str, MethodConfig], h: float, t_end: float) -> DriftReport:
    """|H(y_n) - H(y_0)| along the same time grid for each configuration."""
    series = []
    for label, config in configs.items():
        trajectory = run_integration(problem, config, h, t_end)
        series.append(DriftSeries(label=label, times=trajectory.times.tolist(),
                                  errors=np.abs(trajectory.energy_errors).tolist()))
    return DriftReport(problem=problem.name, h=h, t_end=t_end, series=series)


_POWER_RANGE = re.compile(r"^\s*(\d+)\^(-?\d+)\s*\.\.\s*(\d+)\^(-?\d+)\s*$")


def parse_h_list(text: str) -> List[float]:
    """Either 'a^i..a^j' (same base, unit exponent steps) or a comma list of numbers."""
    match = _POWER_RANGE.match(text)
    if match:
        base, first, base2, last = match.groups()
        if base != base2:
            raise ValueError(f"power range {text!r} mixes bases")
        step = -1 if int(last) < int(first) else 1
        return [float(int(base)) ** e for e in range(int(first), int(last) + step, step)]
    return [float(part) for part in text.split(",") if part.strip()]


def parse_config_spec(problem: ProblemSpec, spec: str, **controls) -> Dict[str, MethodConfig]:
    """'mk:lobatto:5,mk-lin:lobatto:5:dc' -> {label: MethodConfig}.

    Each entry is method[:family[:k[:dc]]]; a missing k falls back to default_nodes.
    """
    configs: Dict[str, MethodConfig] = {}
    for entry in (part.strip() for part in spec.split(",")):
        if not entry:
            continue
        fields = entry.split(":")
        drift = fields[-1] == "dc"
        if drift:
            fields = fields[:-1]
        if not 1 <= len(fields) <= 3:
            raise ValueError(f"cannot parse method entry {entry!r}")
        method = fields[0]
        family = fields[1] if len(fields) > 1 else "lobatto"
        k = int(fields[2]) if len(fields) > 2 else None
        configs[entry] = build_config(problem, method, family, k, drift_correct=drift, **controls)
    if not configs:
        raise ValueError("no method configurations given")
    return configs
