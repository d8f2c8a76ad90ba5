"""Fourth-order two-step energy-preserving integrators for canonical Hamiltonian systems."""
from .errors import (
    DegenerateGradient,
    DimensionMismatch,
    FixedPointDivergence,
    InvalidState,
    MissingPolynomialDegree,
    TwoStepError,
    UnsupportedRule,
)
from .hamiltonian import CallbackHamiltonian, HamiltonianSystem, PolynomialHamiltonian, apply_j, eval_grad, eval_h
from .integrator import (
    MethodConfig,
    MethodKind,
    Predictor,
    StepRecord,
    Trajectory,
    integrate,
    step_hbvm4,
    step_mk,
    step_mk_linear,
    step_trapezoidal_k,
)
from .interpolant import QuadraticCurve
from .problems import ProblemSpec, get_problem
from .quadrature import QuadratureFamily, QuadratureRule, make_rule, required_nodes

__version__ = "0.1.0"
