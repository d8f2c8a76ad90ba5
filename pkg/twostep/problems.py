"""
Built-in test problems.

All states use the (q, p) ordering. The sextic problem is written in the
literature as H(p, q); its initial point [0.2, 0.5] is read here as
(q, p) = (0.2, 0.5).
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .hamiltonian import CallbackHamiltonian, HamiltonianSystem, PolynomialHamiltonian, as_state


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    hamiltonian: HamiltonianSystem
    y0: np.ndarray = field(repr=False)
    default_interval: float
    reference_solution: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)
    period: Optional[float] = None
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "y0", as_state(self.y0, self.hamiltonian.dim_m))

    @property
    def poly_degree(self) -> Optional[int]:
        return self.hamiltonian.poly_degree

    @property
    def energy0(self) -> float:
        return float(self.hamiltonian.energy(self.y0))


def cubic_pendulum() -> ProblemSpec:
    H = PolynomialHamiltonian(1, [(0.5, (0, 2)), (0.5, (2, 0)), (-1.0 / 6.0, (3, 0))], name="pendulum3")
    return ProblemSpec(name="pendulum3", hamiltonian=H, y0=[0.0, 1.0], default_interval=10.0,
                       description="cubic pendulum H = p^2/2 + q^2/2 - q^3/6")


def fhp_sextic() -> ProblemSpec:
    H = PolynomialHamiltonian(1, [
        (1.0 / 3.0, (0, 3)),
        (-0.5, (0, 1)),
        (1.0 / 30.0, (6, 0)),
        (0.25, (4, 0)),
        (-1.0 / 3.0, (3, 0)),
        (1.0 / 6.0, (0, 0)),
    ], name="fhp6")
    return ProblemSpec(name="fhp6", hamiltonian=H, y0=[0.2, 0.5], default_interval=250.0,
                       description="sextic H = p^3/3 - p/2 + q^6/30 + q^4/4 - q^3/3 + 1/6")


def _kepler_energy(y):
    q1, q2, p1, p2 = np.moveaxis(y, -1, 0)
    return 0.5 * (p1 * p1 + p2 * p2) - 1.0 / np.sqrt(q1 * q1 + q2 * q2)


def _kepler_gradient(y):
    q1, q2, p1, p2 = np.moveaxis(y, -1, 0)
    r3 = (q1 * q1 + q2 * q2) ** 1.5
    return np.stack((q1 / r3, q2 / r3, p1, p2), axis=-1)


def kepler(e: float = 0.6) -> ProblemSpec:
    """Two-body problem on an ellipse of eccentricity e and period 2 pi."""
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must lie in [0, 1), got {e}")
    H = CallbackHamiltonian(2, _kepler_energy, _kepler_gradient, name="kepler")
    y0 = [1.0 - e, 0.0, 0.0, np.sqrt((1.0 + e) / (1.0 - e))]
    return ProblemSpec(name="kepler", hamiltonian=H, y0=y0, default_interval=50.0, period=2.0 * np.pi,
                       description=f"Kepler problem, eccentricity {e}")


def harmonic_oscillator() -> ProblemSpec:
    H = PolynomialHamiltonian(1, [(0.5, (0, 2)), (0.5, (2, 0))], name="sho")
    y0 = np.array([0.0, 1.0])

    def exact(t: float) -> np.ndarray:
        cos, sin = np.cos(t), np.sin(t)
        return np.array([y0[0] * cos + y0[1] * sin, -y0[0] * sin + y0[1] * cos])

    return ProblemSpec(name="sho", hamiltonian=H, y0=y0, default_interval=10.0, reference_solution=exact,
                       period=2.0 * np.pi, description="harmonic oscillator H = p^2/2 + q^2/2")


PROBLEMS: Dict[str, Callable[..., ProblemSpec]] = {
    "pendulum3": cubic_pendulum,
    "fhp6": fhp_sextic,
    "kepler": kepler,
    "sho": harmonic_oscillator,
}


def get_problem(name: str, eccentricity: Optional[float] = None) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose one of {sorted(PROBLEMS)}") from None
    if name == "kepler" and eccentricity is not None:
        return factory(eccentricity)
    return factory()


def custom_problem(hamiltonian: HamiltonianSystem, y0, t_end: float = 10.0) -> ProblemSpec:
    return ProblemSpec(name=hamiltonian.name, hamiltonian=hamiltonian, y0=y0, default_interval=t_end)


def load_problem(name: str = "pendulum3", eccentricity: Optional[float] = None, poly=None, y0=None) -> ProblemSpec:
    """A built-in problem, optionally restarted from y0, or a user polynomial when poly is given."""
    if poly is not None:
        if y0 is None:
            raise ValueError("a user-defined polynomial Hamiltonian needs an initial state y0")
        return custom_problem(PolynomialHamiltonian.from_json(poly), y0)
    problem = get_problem(name, eccentricity)
    if y0 is not None:
        problem = ProblemSpec(name=problem.name, hamiltonian=problem.hamiltonian, y0=y0,
                              default_interval=problem.default_interval, period=problem.period,
                              description=problem.description)
    return problem
