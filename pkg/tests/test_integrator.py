import numpy as np
import numpy.testing as npt
import pytest
from pydantic import ValidationError

from twostep.errors import FixedPointDivergence
from twostep.hamiltonian import CallbackHamiltonian, apply_j
from twostep.integrator import (
    MethodConfig,
    MethodKind,
    Predictor,
    a_of_z,
    correction_g,
    drift_correct,
    integrate,
    line_integral,
    residual_r,
    step_hbvm4,
    step_mk,
    step_mk_linear,
    step_trapezoidal_k,
)
from twostep.interpolant import QuadraticCurve
from twostep.quadrature import make_rule


def _start(problem, h, rule):
    """y1 from one HBVM-4 step of total length h."""
    _, y1 = step_hbvm4(problem.hamiltonian, rule, problem.y0, h / 2)
    return y1


def test_config_validation(lobatto5):
    with pytest.raises(ValidationError):
        MethodConfig(rule=lobatto5, fp_tol=0.0)
    with pytest.raises(ValidationError):
        MethodConfig(rule=lobatto5, fp_max_iter=0)
    with pytest.raises(ValidationError):
        MethodConfig(rule=lobatto5, predictor="guess")
    config = MethodConfig(kind="mk-lin", rule=lobatto5, drift_correct=True)
    assert config.kind is MethodKind.MK_LINEAR
    assert config.label == "mk-lin:lobatto:5:dc"


def test_mk_step_solves_its_defining_equation(pendulum, lobatto5):
    H, h = pendulum.hamiltonian, 0.125
    config = MethodConfig(rule=lobatto5)
    y0 = pendulum.y0
    y1 = _start(pendulum, h, lobatto5)
    y2, record = step_mk(H, config, y0, y1, h)

    curve = QuadraticCurve(y0, y1, y2)
    defect = y2 - y0 - 2 * h * apply_j(a_of_z(H, lobatto5, curve)) - correction_g(H, lobatto5, curve)
    assert np.max(np.abs(defect)) < 1e-13
    npt.assert_allclose(record.residual, residual_r(H, lobatto5, curve), rtol=1e-8, atol=1e-16)
    assert abs(H.energy(y2) - H.energy(y0)) < 1e-13
    assert record.fp_iterations > 1
    assert record.correction_norm > 0.0


def test_linear_step_has_no_correction(pendulum, lobatto5):
    H, h = pendulum.hamiltonian, 0.125
    y0 = pendulum.y0
    y1 = _start(pendulum, h, lobatto5)
    y2, record = step_mk_linear(H, MethodConfig(kind="mk-lin", rule=lobatto5), y0, y1, h)

    curve = QuadraticCurve(y0, y1, y2)
    defect = y2 - y0 - 2 * h * apply_j(a_of_z(H, lobatto5, curve))
    assert np.max(np.abs(defect)) < 1e-13
    assert record.correction_norm == 0.0
    # the residual is O(h^5), so the linear method misses H by a little
    assert 0.0 < abs(record.energy_error) < 1e-4


def test_correction_is_small(pendulum, lobatto5):
    h = 0.0625
    y0 = pendulum.y0
    y1 = _start(pendulum, h, lobatto5)
    y2, _ = step_mk_linear(pendulum.hamiltonian, MethodConfig(rule=lobatto5), y0, y1, h)
    G = correction_g(pendulum.hamiltonian, lobatto5, QuadraticCurve(y0, y1, y2))
    assert 0.0 < np.linalg.norm(G) < 1e-5


def test_linear_method_predictor_reaches_the_same_point(pendulum, lobatto5):
    H, h = pendulum.hamiltonian, 0.125
    y0 = pendulum.y0
    y1 = _start(pendulum, h, lobatto5)
    plain, _ = step_mk(H, MethodConfig(rule=lobatto5), y0, y1, h)
    two_phase, record = step_mk(H, MethodConfig(rule=lobatto5, predictor=Predictor.LINEAR_METHOD), y0, y1, h)
    npt.assert_allclose(two_phase, plain, atol=1e-13)
    assert record.fp_iterations > 1


def test_fixed_point_increments_shrink(pendulum, lobatto5):
    H, h = pendulum.hamiltonian, 0.25
    y0 = pendulum.y0
    y1 = _start(pendulum, h, lobatto5)
    trace = []
    step_mk(H, MethodConfig(rule=lobatto5), y0, y1, h, trace=trace)
    head = [x for x in trace if x > 1e-13]
    assert len(head) >= 2
    assert all(later < earlier for earlier, later in zip(head, head[1:]))


def test_gradients_at_frozen_nodes_are_evaluated_once(pendulum, lobatto5):
    rows = []
    poly = pendulum.hamiltonian

    def gradient(y):
        rows.append(y.shape[0] if y.ndim > 1 else 1)
        return poly.gradient(y)

    H = CallbackHamiltonian(1, poly.energy, gradient, name="counting")
    h = 0.125
    y0 = pendulum.y0
    y1 = _start(pendulum, h, lobatto5)
    rows.clear()
    _, record = step_mk(H, MethodConfig(rule=lobatto5), y0, y1, h)
    # lobatto-5 has c = 0 and c = 1/2 where gamma does not depend on y2
    assert rows[0] == 2
    assert rows[1:] == [3] * (record.fp_iterations + 1)


def test_milne_simpson_degeneration(sho):
    simpson = make_rule("uniform", 3)
    config = MethodConfig(kind="mk-lin", rule=simpson)
    H, h = sho.hamiltonian, 0.1
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    y0 = sho.y0
    y1 = sho.reference_solution(h)
    for _ in range(20):
        y2, _ = step_mk_linear(H, config, y0, y1, h)
        # explicit form of y2 = y0 + h/3 J (y0 + 4 y1 + y2) for the linear vector field
        expected = np.linalg.solve(np.eye(2) - h / 3 * J, y0 + h / 3 * J @ (y0 + 4 * y1))
        npt.assert_allclose(y2, expected, atol=1e-13)
        y0, y1 = y1, y2


@pytest.mark.parametrize("k", [4, 5, 6])
def test_hbvm4_starter(pendulum, reference, k):
    rule = make_rule("lobatto", k)
    H = pendulum.hamiltonian
    errors, stage_errors = [], []
    for h in (2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6):
        u1, u2 = step_hbvm4(H, rule, pendulum.y0, h / 2)
        errors.append(np.linalg.norm(u2 - reference(H, pendulum.y0, h, 400)))
        stage_errors.append(np.linalg.norm(u1 - reference(H, pendulum.y0, h / 2, 200)))
        assert abs(H.energy(u2) - pendulum.energy0) < 1e-13
    ratios = [coarse / fine for coarse, fine in zip(errors, errors[1:])]
    assert all(24.0 <= r <= 42.0 for r in ratios), ratios
    # the internal stage is only fourth-order accurate
    stage_ratios = [coarse / fine for coarse, fine in zip(stage_errors, stage_errors[1:])]
    assert all(12.0 <= r <= 20.0 for r in stage_ratios), stage_ratios


def test_trapezoidal_conserves_cubic_energy(pendulum):
    rule = make_rule("lobatto", 3)
    config = MethodConfig(kind="trap", rule=rule)
    trajectory = integrate(pendulum.hamiltonian, config, pendulum.y0, 0.1, 100)
    assert trajectory.max_energy_error < 1e-13
    y1 = step_trapezoidal_k(pendulum.hamiltonian, rule, pendulum.y0, 0.1)
    npt.assert_array_equal(y1, trajectory.records[1].y)


def test_trapezoidal_is_second_order(sho):
    config = MethodConfig(kind="trap", rule=make_rule("gauss", 2))
    errors = []
    for h, n in ((0.1, 50), (0.05, 100)):
        trajectory = integrate(sho.hamiltonian, config, sho.y0, h, n)
        errors.append(np.linalg.norm(trajectory.final.y - sho.reference_solution(5.0)))
    assert 1.8 < np.log2(errors[0] / errors[1]) < 2.2


def test_hbvm4_as_a_method(pendulum, reference):
    config = MethodConfig(kind="hbvm4", rule=make_rule("lobatto", 4))
    trajectory = integrate(pendulum.hamiltonian, config, pendulum.y0, 0.125, 16)
    assert trajectory.max_energy_error < 1e-13
    npt.assert_allclose(trajectory.final.y, reference(pendulum.hamiltonian, pendulum.y0, 2.0, 2000), atol=1e-4)


def test_integrate_trajectory(pendulum, lobatto5):
    config = MethodConfig(rule=lobatto5)
    trajectory = integrate(pendulum.hamiltonian, config, pendulum.y0, 0.125, 80)
    assert len(trajectory.records) == 81
    npt.assert_allclose(trajectory.times, 0.125 * np.arange(81))
    npt.assert_array_equal(trajectory.states[0], pendulum.y0)
    assert trajectory.max_energy_error < 1e-12
    assert trajectory.total_iterations > 80
    assert trajectory.energy0 == pendulum.energy0


def test_exact_starter(sho):
    config = MethodConfig(rule=make_rule("lobatto", 3))
    trajectory = integrate(sho.hamiltonian, config, sho.y0, 0.05, 40, starter=sho.reference_solution)
    npt.assert_array_equal(trajectory.records[1].y, sho.reference_solution(0.05))
    assert trajectory.records[1].fp_iterations == 0
    npt.assert_allclose(trajectory.final.y, sho.reference_solution(2.0), atol=1e-5)


def test_degenerate_gradient_falls_back_to_the_linear_step(pendulum, lobatto5):
    origin = np.zeros(2)
    y2, record = step_mk(pendulum.hamiltonian, MethodConfig(rule=lobatto5), origin, origin, 0.1)
    npt.assert_array_equal(y2, origin)
    assert record.warning == "degenerate-gradient"
    assert record.correction_norm == 0.0


def test_divergence_is_reported(pendulum, lobatto5):
    config = MethodConfig(rule=lobatto5, fp_max_iter=50)
    with pytest.raises(FixedPointDivergence) as info:
        integrate(pendulum.hamiltonian, config, pendulum.y0, 4.0, 5)
    assert info.value.step_index is not None
    assert info.value.iterations >= 1
    assert "step" in str(info.value)


def test_step_argument_errors(pendulum, lobatto5):
    config = MethodConfig(rule=lobatto5)
    with pytest.raises(ValueError):
        step_mk(pendulum.hamiltonian, config, pendulum.y0, np.zeros(4), 0.1)
    with pytest.raises(ValueError):
        step_mk(pendulum.hamiltonian, config, pendulum.y0, pendulum.y0, 0.0)
    with pytest.raises(ValueError):
        integrate(pendulum.hamiltonian, config, pendulum.y0, 0.1, 0)


def test_drift_correct_moves_onto_the_level_set(kepler):
    H = kepler.hamiltonian
    y = kepler.y0 + np.array([1e-8, -2e-8, 3e-8, 1e-8])
    assert abs(H.energy(y) - kepler.energy0) > 1e-9
    corrected = drift_correct(H, y, kepler.energy0)
    assert abs(H.energy(corrected) - kepler.energy0) < 1e-13


def test_drift_corrected_kepler(kepler):
    config = MethodConfig(rule=make_rule("lobatto", 9), drift_correct=True)
    trajectory = integrate(kepler.hamiltonian, config, kepler.y0, 0.01, 2000)
    assert trajectory.max_energy_error <= 1e-12


@pytest.mark.slow
def test_drift_corrected_kepler_long_run(kepler):
    config = MethodConfig(rule=make_rule("lobatto", 9), drift_correct=True)
    trajectory = integrate(kepler.hamiltonian, config, kepler.y0, 0.01, 100_000)
    assert trajectory.max_energy_error <= 1e-12


def test_correction_is_fifth_order(pendulum, lobatto5):
    norms = []
    for h in (2.0 ** -3, 2.0 ** -4, 2.0 ** -5):
        y1 = _start(pendulum, h, lobatto5)
        _, record = step_mk(pendulum.hamiltonian, MethodConfig(rule=lobatto5), pendulum.y0, y1, h)
        norms.append(record.correction_norm)
    ratios = [coarse / fine for coarse, fine in zip(norms, norms[1:])]
    assert all(20.0 <= r <= 48.0 for r in ratios), ratios


def test_single_step_is_the_starter(pendulum, lobatto5):
    h = 0.125
    trajectory = integrate(pendulum.hamiltonian, MethodConfig(rule=lobatto5), pendulum.y0, h, 1)
    assert len(trajectory.records) == 2
    npt.assert_array_equal(trajectory.final.y, _start(pendulum, h, lobatto5))


def test_linear_method_residual_is_fifth_order(fhp):
    config = MethodConfig(kind="mk-lin", rule=make_rule("lobatto", 7))
    worst = []
    for h in (2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7):
        trajectory = integrate(fhp.hamiltonian, config, fhp.y0, h, int(round(10.0 / h)))
        worst.append(max(abs(r.residual) for r in trajectory.records))
    ratios = [coarse / fine for coarse, fine in zip(worst, worst[1:])]
    assert all(25.0 <= r <= 40.0 for r in ratios), ratios


def test_line_integral_matches_energy_difference(fhp):
    rng = np.random.default_rng(7)
    rule = make_rule("lobatto", 7)
    H = fhp.hamiltonian
    for _ in range(20):
        y0, y1, z = rng.normal(scale=0.5, size=(3, 2))
        work = line_integral(H, rule, QuadraticCurve(y0, y1, z))
        exact = H.energy(z) - H.energy(y0)
        assert abs(work - exact) <= 1e-13 * (1.0 + abs(H.energy(z)) + abs(H.energy(y0)))


def test_energy_identity_through_the_line_integral(pendulum, lobatto5):
    H, h = pendulum.hamiltonian, 0.125
    y1 = _start(pendulum, h, lobatto5)

    y2, record = step_mk(H, MethodConfig(rule=lobatto5), pendulum.y0, y1, h)
    assert abs(record.line_integral) <= 5e-14
    assert abs(H.energy(y2) - H.energy(pendulum.y0) - record.line_integral) <= 5e-14

    # without the correction the work along the curve is exactly -r
    y2, record = step_mk_linear(H, MethodConfig(kind="mk-lin", rule=lobatto5), pendulum.y0, y1, h)
    assert abs(record.residual) > 1e-12
    npt.assert_allclose(record.line_integral, -record.residual, rtol=1e-6, atol=5e-14)
    assert abs(H.energy(y2) - H.energy(pendulum.y0) - record.line_integral) <= 5e-14
