from typing import Optional


class TwoStepError(Exception):
    """Base class for every error raised by the integrators and their helpers."""

    def __init__(self, message: str, step_index: Optional[int] = None):
        super().__init__(message)
        self.step_index = step_index

    def __str__(self):
        message = super().__str__()
        if self.step_index is not None:
            return f"{message} (step {self.step_index})"
        return message


class DimensionMismatch(TwoStepError, ValueError):
    """A state vector or exponent vector does not have the expected length."""


class InvalidState(TwoStepError, ValueError):
    """A state vector contains NaN or Inf entries."""


class UnsupportedRule(TwoStepError, ValueError):
    """The requested quadrature family / node count is not available."""


class MissingPolynomialDegree(TwoStepError, ValueError):
    """An operation needs the polynomial degree of a non-polynomial Hamiltonian."""


class DegenerateGradient(TwoStepError, ArithmeticError):
    """The averaged gradient (or the gradient itself) is below the norm floor."""

    def __init__(self, norm: float, floor: float, step_index: Optional[int] = None):
        super().__init__(f"gradient norm {norm:.3e} is below the floor {floor:.1e}", step_index)
        self.norm = norm
        self.floor = floor


class FixedPointDivergence(TwoStepError, ArithmeticError):
    """The fixed-point iteration did not converge; the stepsize is probably too large."""

    def __init__(self, message: str, iterations: int, last_increment: float,
                 step_index: Optional[int] = None):
        super().__init__(message, step_index)
        self.iterations = iterations
        self.last_increment = last_increment
