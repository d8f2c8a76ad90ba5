import numpy as np
import numpy.testing as npt
import pytest

from twostep.errors import DimensionMismatch
from twostep.hamiltonian import check_gradient
from twostep.problems import PROBLEMS, get_problem, kepler, load_problem


def _sample(problem, rng, n=20):
    m = problem.hamiltonian.dim_m
    if problem.name == "kepler":
        # keep away from the singularity at the origin
        radius = rng.uniform(0.5, 1.5, n)
        angle = rng.uniform(0.0, 2 * np.pi, n)
        momenta = rng.uniform(-1.0, 1.0, (n, 2))
        return np.column_stack((radius * np.cos(angle), radius * np.sin(angle), momenta))
    return rng.uniform(-1.0, 1.0, (n, 2 * m))


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_gradients_match_finite_differences(name):
    problem = get_problem(name)
    points = _sample(problem, np.random.default_rng(20))
    assert check_gradient(problem.hamiltonian, points) <= 1e-6


def test_initial_energies():
    assert get_problem("pendulum3").energy0 == pytest.approx(0.5, abs=1e-15)
    assert get_problem("sho").energy0 == pytest.approx(0.5, abs=1e-15)
    assert get_problem("kepler").energy0 == pytest.approx(-0.5, abs=1e-14)
    q, p = 0.2, 0.5
    expected = p ** 3 / 3 - p / 2 + q ** 6 / 30 + q ** 4 / 4 - q ** 3 / 3 + 1 / 6
    assert get_problem("fhp6").energy0 == pytest.approx(expected, abs=1e-15)


def test_polynomial_degrees():
    assert get_problem("pendulum3").poly_degree == 3
    assert get_problem("fhp6").poly_degree == 6
    assert get_problem("sho").poly_degree == 2
    assert get_problem("kepler").poly_degree is None


def test_kepler_eccentricity():
    circular = kepler(0.0)
    npt.assert_allclose(circular.y0, [1.0, 0.0, 0.0, 1.0])
    assert circular.energy0 == pytest.approx(-0.5)
    assert get_problem("kepler", eccentricity=0.3).y0[0] == pytest.approx(0.7)
    with pytest.raises(ValueError):
        kepler(1.0)
    with pytest.raises(ValueError):
        kepler(-0.1)


def test_harmonic_oscillator_reference(sho):
    npt.assert_allclose(sho.reference_solution(0.0), sho.y0)
    npt.assert_allclose(sho.reference_solution(np.pi / 2), [1.0, 0.0], atol=1e-15)
    y = sho.reference_solution(1.234)
    assert sho.hamiltonian.energy(y) == pytest.approx(0.5, abs=1e-15)


def test_kepler_orbit_closes(kepler, reference):
    y = reference(kepler.hamiltonian, kepler.y0, kepler.period, 20000)
    npt.assert_allclose(y, kepler.y0, atol=1e-6)


def test_unknown_problem():
    with pytest.raises(ValueError):
        get_problem("henon")


def test_load_problem_variants():
    restarted = load_problem("pendulum3", y0=[0.1, 0.2])
    npt.assert_array_equal(restarted.y0, [0.1, 0.2])
    assert restarted.name == "pendulum3"

    user = load_problem(poly=[[0.5, [2, 0]], [0.5, [0, 2]]], y0=[1.0, 0.0])
    assert user.poly_degree == 2 and user.energy0 == 0.5

    with pytest.raises(ValueError):
        load_problem(poly=[[0.5, [2, 0]]])
    with pytest.raises(DimensionMismatch):
        load_problem("pendulum3", y0=[0.0, 1.0, 2.0, 3.0])
