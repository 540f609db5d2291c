import numpy as np
import pytest

from exceptions import StageConvergenceError, TableauError
from models import ButcherTableau, StageSolveConfig, rooted_trees, tree_density
from resources.problems import initial_data, nonlinear_term
from resources.rk import (
    apply_stage_inverses,
    builtin_tableau,
    check_a_stability,
    integrate,
    solve_stages,
    stability_at_infinity,
    stability_function,
    stability_matrix,
    stage_inverses,
    step,
    tableau_from_config,
    y_norm,
)
from resources.spectral_core import apply_blocks
from resources.study import estimate_order


def test_rooted_tree_counts():
    assert [len(rooted_trees(n)) for n in range(1, 7)] == [1, 1, 2, 4, 9, 20]


def test_tree_density_of_the_bushy_tree():
    # Root with three leaves: gamma = 4
    assert tree_density(((), (), ())) == 4


@pytest.mark.parametrize("name, s, p", [("midpoint", 1, 2), ("gauss2", 2, 4), ("gauss3", 3, 6)])
def test_builtin_tableaux_meet_their_order(name, s, p):
    tab = builtin_tableau(name)
    assert (tab.s, tab.p) == (s, p)
    assert tab.order_residual() < 1e-12


def test_overstated_order_is_rejected():
    with pytest.raises(TableauError):
        ButcherTableau([[0.5]], [1.0], p = 3)


def test_unknown_tableau_is_rejected():
    with pytest.raises(TableauError):
        builtin_tableau("radau5")


def test_inline_tableau_from_config():
    cfg = {"tableau_name": "inline", "tableau_a": [0.5], "tableau_b": [1.0], "tableau_p": 2}
    assert tableau_from_config(cfg).s == 1
    with pytest.raises(TableauError):
        tableau_from_config({**cfg, "tableau_a": [0.5, 0.5]})


def test_midpoint_stability_function(midpoint):
    z = -0.3 + 2j
    assert stability_function(midpoint, z) == pytest.approx((1 + z / 2) / (1 - z / 2))
    assert stability_at_infinity(midpoint) == pytest.approx(-1.0)


@pytest.mark.parametrize("name", ["midpoint", "gauss2", "gauss3"])
def test_gauss_methods_pass_the_stability_audit(name):
    report = check_a_stability(builtin_tableau(name))
    assert report.passed, report.reasons
    assert report.max_abs_s <= 1 + 1e-12


def test_explicit_euler_fails_the_stability_audit():
    report = check_a_stability(ButcherTableau([[0.0]], [1.0], p = 1, name = "euler"))
    assert not report.rk1
    assert not report.rk2
    assert "alpha singular" in report.reasons


def test_zero_step_is_the_identity(wave, midpoint, smooth_data):
    assert np.array_equal(step(wave, smooth_data, 0.0, midpoint).coeffs, smooth_data.coeffs)


def test_step_beyond_h_max_is_rejected(wave, midpoint, smooth_data):
    with pytest.raises(ValueError):
        step(wave, smooth_data, 0.5, midpoint, StageSolveConfig(h_max = 0.25))


def test_stage_solve_reports_its_iterations(wave, gauss2, smooth_data):
    stages = solve_stages(wave, smooth_data, 0.05, gauss2)
    assert stages.s == 2
    assert 1 <= stages.iterations <= 100
    assert stages.residual <= 1e-12 * (1 + y_norm(wave, smooth_data.coeffs))


def test_stage_solve_gives_up_after_max_iter(wave, midpoint, smooth_data):
    with pytest.raises(StageConvergenceError) as excinfo:
        integrate(wave, smooth_data, 0.1, 3, midpoint, StageSolveConfig(max_iter = 1))
    assert excinfo.value.step == 1
    assert str(excinfo.value).startswith("step 1: ")


@pytest.mark.parametrize("name", ["midpoint", "gauss2"])
def test_gauss_methods_conserve_the_linear_energy(linear_wave, name):
    U0 = initial_data(linear_wave, 1.0)
    trajectory = integrate(linear_wave, U0, 0.1, 20, builtin_tableau(name))

    norms = y_norm(linear_wave, np.stack([state.coeffs for state in trajectory]))
    assert np.allclose(norms, norms[0], rtol = 1e-10)


def test_integrate_records_every_stride(wave, midpoint, smooth_data):
    trajectory = integrate(wave, smooth_data, 0.01, 10, midpoint, stride = 4)

    assert list(trajectory.steps) == [0, 4, 8, 10]
    assert trajectory.times == pytest.approx([0.0, 0.04, 0.08, 0.1])
    assert trajectory.n_steps == 10
    assert trajectory.initial is smooth_data


def test_midpoint_is_second_order_on_smooth_data(wave, midpoint, smooth_data):
    reference = integrate(wave, smooth_data, 0.0025, 40, midpoint).final
    errors = []
    for h, n in ((0.02, 5), (0.01, 10)):
        final = integrate(wave, smooth_data, h, n, midpoint).final
        errors.append(float(y_norm(wave, final.coeffs - reference.coeffs)))

    assert 1.7 < np.log2(errors[0] / errors[1]) < 2.3


@pytest.mark.parametrize("name", ["midpoint", "gauss2", "gauss3"])
def test_linear_step_is_the_stability_matrix_per_mode(linear_wave, name):
    tab = builtin_tableau(name)
    U = initial_data(linear_wave, 0.5)
    h = 0.1

    expected = apply_blocks(stability_matrix(tab, h * linear_wave.spectrum.blocks), U.coeffs)

    assert np.allclose(step(linear_wave, U, h, tab).coeffs, expected, rtol = 0, atol = 1e-12)


@pytest.mark.parametrize("name", ["midpoint", "gauss2", "gauss3"])
def test_stability_function_is_consistent(name):
    tab = builtin_tableau(name)
    for z in 1e-3 * np.exp(1j * np.linspace(0, 2 * np.pi, 9)):
        assert abs(stability_function(tab, z) - 1 - z) <= abs(z) ** 2


@pytest.mark.parametrize("name", ["midpoint", "gauss2"])
def test_stability_function_matches_the_exponential_to_order_p_plus_1(name):
    tab = builtin_tableau(name)
    pairs = [(h, abs(stability_function(tab, 1j * h) - np.exp(1j * h))) for h in (0.2, 0.1, 0.05)]

    assert estimate_order(pairs).slope == pytest.approx(tab.p + 1, abs = 0.1)


def test_stages_satisfy_the_fixed_point_equation(wave, gauss2, smooth_data):
    h = 0.05
    cfg = StageSolveConfig()
    W = np.stack([stage.coeffs for stage in solve_stages(wave, smooth_data, h, gauss2, cfg).stages])

    base = np.broadcast_to(smooth_data.coeffs, W.shape)
    coupled = np.einsum("ij,jcn->icn", gauss2.a, nonlinear_term(wave, W))
    image = apply_stage_inverses(stage_inverses(wave.spectrum, gauss2, h), base + h * coupled)

    residual = float(np.max(y_norm(wave, W - image)))
    assert residual <= 10 * cfg.rel_tol * (1 + float(y_norm(wave, smooth_data.coeffs)))


def test_linear_stages_converge_in_one_iteration(linear_wave, gauss2):
    stages = solve_stages(linear_wave, initial_data(linear_wave, 1.0), 0.1, gauss2)

    assert stages.iterations == 1
    assert stages.residual == 0.0


def test_trajectory_indexes_its_recorded_states(wave, midpoint, smooth_data):
    trajectory = integrate(wave, smooth_data, 0.01, 3, midpoint)

    assert trajectory[0] is smooth_data
    assert trajectory[-1] is trajectory.final
    assert len(trajectory) == 4
