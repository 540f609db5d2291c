'''
----------------------------
Implicit Runge-Kutta methods:
tableaux, A-stability audit, stage solve and time stepping
----------------------------
'''

import json
import logging
from functools import lru_cache

import click
import numpy as np

from exceptions import ProblemError, StageConvergenceError, TableauError, abort
from models import ButcherTableau, SamplingPlan, StabilityReport, StageSolveConfig, StageVector, Trajectory
from models.field import domain_factor
from outputs import output_path, write_coefficients, write_trajectory_csv
from resources.problems import build_problem, initial_data, nonlinear_term, spec_from_config
from resources.spectral_core import apply_blocks, weighted_norm
from schemas import StabilityReportSchema, config_arguments

logger = logging.getLogger(__name__)

blp = click.Group("rk", help = "Runge-Kutta methods and time stepping")

# Singularity threshold for I - z*alpha and alpha itself
CONDITION_LIMIT = 1e14
# Smallest singular value of I - z*alpha accepted by the RK2 audit
SINGULAR_FLOOR = 1e-8
STABILITY_SLACK = 1e-12


# *** Tableaux ***

def _gauss2():
    r = np.sqrt(3) / 6
    return ButcherTableau([[0.25, 0.25 - r], [0.25 + r, 0.25]], [0.5, 0.5], p = 4, name = "gauss2")


def _gauss3():
    r = np.sqrt(15)
    a = [
        [5 / 36, 2 / 9 - r / 15, 5 / 36 - r / 30],
        [5 / 36 + r / 24, 2 / 9, 5 / 36 - r / 24],
        [5 / 36 + r / 30, 2 / 9 + r / 15, 5 / 36],
    ]
    return ButcherTableau(a, [5 / 18, 4 / 9, 5 / 18], p = 6, name = "gauss3")


BUILTIN_TABLEAUX = {
    "midpoint": lambda: ButcherTableau([[0.5]], [1.0], p = 2, name = "midpoint"),
    "gauss2": _gauss2,
    "gauss3": _gauss3,
}


@lru_cache(maxsize = None)
def builtin_tableau(name):
    try:
        return BUILTIN_TABLEAUX[name]()
    except KeyError:
        raise TableauError(
            f"Unknown tableau '{name}', expected one of {', '.join(sorted(BUILTIN_TABLEAUX))}"
        ) from None


def tableau_from_config(cfg):
    name = cfg["tableau_name"]
    if name != "inline":
        return builtin_tableau(name)
    a, b, p = cfg.get("tableau_a"), cfg.get("tableau_b"), cfg.get("tableau_p")
    if a is None or b is None or p is None:
        raise TableauError("An inline tableau needs tableau.a, tableau.b and tableau.p")
    s = len(b)
    if len(a) != s * s:
        raise TableauError(f"tableau.a needs {s * s} row-major entries for {s} stages, got {len(a)}")
    return ButcherTableau(np.reshape(a, (s, s)), b, p = p, name = "inline")


def solver_from_config(cfg):
    return StageSolveConfig(
        rel_tol = cfg["solver_rel_tol"],
        max_iter = cfg["solver_max_iter"],
        h_max = cfg["solver_h_max"],
    )


# *** Stability ***

def stability_function(tab, z):
    z = complex(z)
    matrix = np.eye(tab.s) - z * tab.a
    if np.linalg.cond(matrix) > CONDITION_LIMIT:
        raise TableauError(f"I - z*alpha is singular for tableau '{tab.name}' at z={z}")
    return 1 + z * (tab.b @ np.linalg.solve(matrix, np.ones(tab.s)))


def _kron_blocks(alpha, blocks):
    # alpha (x) Z for a batch of d x d matrices Z, shape (..., s*d, s*d)
    s, d = alpha.shape[0], blocks.shape[-1]
    kron = np.einsum("ij,...ce->...icje", alpha, blocks)
    return kron.reshape(blocks.shape[:-2] + (s * d, s * d))


def stability_matrix(tab, Z):
    # S(Z) = I + (b^T (x) I)(I - alpha (x) Z)^{-1}(1 (x) Z) for d x d matrices Z (batched)
    Z = np.asarray(Z, dtype = complex)
    s, d = tab.s, Z.shape[-1]
    system = np.eye(s * d) - _kron_blocks(tab.a, Z)
    rhs = np.concatenate([Z] * s, axis = -2)
    stages = np.linalg.solve(system, rhs).reshape(Z.shape[:-2] + (s, d, d))
    return np.eye(d) + np.einsum("i,...icd->...cd", tab.b, stages)


def stability_at_infinity(tab):
    return 1 - tab.b @ np.linalg.solve(tab.a, np.ones(tab.s))


def check_a_stability(tab, plan = None):
    plan = plan or SamplingPlan.default()
    z = plan.points
    reasons = []

    matrices = np.eye(tab.s) - z[:, None, None] * tab.a
    singular_values = np.linalg.svd(matrices, compute_uv = False)
    smallest = singular_values[:, -1]
    invertible = smallest > singular_values[:, 0] / CONDITION_LIMIT

    values = np.full(z.shape, np.inf, dtype = complex)
    solved = np.linalg.solve(matrices[invertible], np.ones((int(invertible.sum()), tab.s, 1)))[..., 0]
    values[invertible] = 1 + z[invertible] * (solved @ tab.b)
    moduli = np.abs(values)
    worst = int(np.argmax(moduli))
    max_abs_s = float(moduli[worst])

    alpha_condition = float(np.linalg.cond(tab.a))
    alpha_invertible = np.isfinite(alpha_condition) and alpha_condition < CONDITION_LIMIT
    s_infinity = complex(stability_at_infinity(tab)) if alpha_invertible else complex("nan")

    rk1 = max_abs_s <= 1 + STABILITY_SLACK
    if not rk1:
        reasons.append(f"|S(z)| = {max_abs_s:.6g} exceeds 1 at z={z[worst]:.6g}")
    if alpha_invertible and abs(s_infinity) > 1 + STABILITY_SLACK:
        rk1 = False
        reasons.append(f"|S(inf)| = {abs(s_infinity):.6g} exceeds 1")

    min_singular = float(smallest.min())
    rk2 = alpha_invertible and min_singular > SINGULAR_FLOOR
    if not alpha_invertible:
        reasons.append("alpha singular")
    if min_singular <= SINGULAR_FLOOR:
        reasons.append(f"I - z*alpha nearly singular at z={z[int(np.argmin(smallest))]:.6g}")

    report = StabilityReport(
        name = tab.name,
        s = tab.s,
        p = tab.p,
        order_residual = tab.order_residual(),
        max_abs_s = max_abs_s,
        s_infinity = s_infinity,
        rk1 = bool(rk1),
        rk2 = bool(rk2),
        alpha_condition = alpha_condition,
        min_singular_value = min_singular,
        plan = plan.describe(),
        reasons = tuple(reasons),
    )
    logger.debug("A-stability audit of %s: RK1=%s RK2=%s", tab.name, report.rk1, report.rk2)
    return report


# *** Stage solve ***

@lru_cache(maxsize = 64)
def stage_inverses(spectrum, tab, h):
    # (I - h alpha (x) A_k)^{-1} for every mode k, shape (N, s*d, s*d)
    size = tab.s * spectrum.d
    matrices = np.eye(size) - h * _kron_blocks(tab.a, spectrum.blocks)
    return np.linalg.inv(matrices)


def apply_stage_inverses(inverses, stages):
    # stages (s, d, N) -> per-mode vectors of length s*d and back
    s, d, n_grid = stages.shape
    vectors = stages.transpose(2, 0, 1).reshape(n_grid, s * d)
    solved = np.einsum("kab,kb->ka", inverses, vectors)
    return solved.reshape(n_grid, s, d).transpose(1, 2, 0)


def _check_step(h, cfg):
    if not 0 <= h <= cfg.h_max:
        raise ValueError(f"Step h={h} outside [0, {cfg.h_max}]")


def y_norm(problem, coeffs):
    # Y-norm of coefficient arrays (..., d, N)
    return weighted_norm(coeffs, problem.spectrum.metric.T, domain_factor(problem.basis))


def solve_stage_coeffs(problem, coeffs, h, tab, cfg, rhs = None):
    # Fixed point of W = (id - h alpha A)^{-1}(1 U + h alpha B(W)); returns (W, iterations, last update)
    rhs = rhs or (lambda stages: nonlinear_term(problem, stages))
    base = np.broadcast_to(coeffs, (tab.s,) + coeffs.shape)
    if h == 0:
        return np.array(base), 0, 0.0

    inverses = stage_inverses(problem.spectrum, tab, h)
    threshold = cfg.rel_tol * (1 + float(y_norm(problem, coeffs)))
    stages = apply_stage_inverses(inverses, base)
    update = np.inf
    for iteration in range(1, cfg.max_iter + 1):
        coupled = np.einsum("ij,jcn->icn", tab.a, rhs(stages))
        updated = apply_stage_inverses(inverses, base + h * coupled)
        update = float(np.max(y_norm(problem, updated - stages)))
        stages = updated
        if not np.isfinite(update):
            break
        if update <= threshold:
            return stages, iteration, update
    raise StageConvergenceError(
        f"stage iteration did not converge for h={h} after {iteration} iterations "
        f"(last update {update:.3e}, tolerance {threshold:.3e}); reduce h",
        iterations = iteration,
        residual = update,
        h = h,
    )


def step_coeffs(problem, coeffs, h, tab, cfg, rhs = None):
    # Psi(U, h) = U + h b^T (id - h alpha A)^{-1}(1 A U + B(W)); returns (Psi, iterations)
    rhs = rhs or (lambda stages: nonlinear_term(problem, stages))
    stages, iterations, _ = solve_stage_coeffs(problem, coeffs, h, tab, cfg, rhs)
    if h == 0:
        return np.array(coeffs), iterations
    linear = apply_blocks(problem.spectrum.blocks, coeffs)
    solved = apply_stage_inverses(stage_inverses(problem.spectrum, tab, h), linear + rhs(stages))
    return coeffs + h * np.einsum("i,icn->cn", tab.b, solved), iterations


def solve_stages(problem, U, h, tab, cfg = None):
    cfg = cfg or StageSolveConfig()
    _check_step(h, cfg)
    stages, iterations, residual = solve_stage_coeffs(problem, U.coeffs, h, tab, cfg)
    return StageVector(stages, U, iterations = iterations, residual = residual)


def step(problem, U, h, tab, cfg = None):
    cfg = cfg or StageSolveConfig()
    _check_step(h, cfg)
    coeffs, _ = step_coeffs(problem, U.coeffs, h, tab, cfg)
    return U.with_coeffs(coeffs)


def integrate_coeffs(problem, U0, h, n_steps, tab, cfg, rhs = None, stride = 1):
    # Iterates step_coeffs from U0; keeps every stride-th state and the last
    cfg = cfg or StageSolveConfig()
    _check_step(h, cfg)
    if n_steps < 0:
        raise ValueError(f"Number of steps must be non-negative, got {n_steps}")
    if stride < 1:
        raise ValueError(f"Stride must be at least 1, got {stride}")

    coeffs = U0.coeffs
    steps, times, states, iterations = [0], [0.0], [U0], []
    for n in range(1, n_steps + 1):
        try:
            coeffs, count = step_coeffs(problem, coeffs, h, tab, cfg, rhs)
        except StageConvergenceError as exc:
            exc.step = n
            raise
        iterations.append(count)
        if n % stride == 0 or n == n_steps:
            steps.append(n)
            times.append(n * h)
            states.append(U0.with_coeffs(coeffs))

    trajectory = Trajectory(steps, times, states, iterations, h = h, stride = stride)
    logger.debug(
        "Integrated %d steps of h=%g with %s, mean stage iterations %.2f",
        n_steps, h, tab.name, trajectory.mean_iterations,
    )
    return trajectory


def integrate(problem, U0, h, n_steps, tab, cfg = None, stride = 1):
    return integrate_coeffs(problem, U0, h, n_steps, tab, cfg, stride = stride)


# *** Commands ***

def _print_report(report):
    click.echo(f"tableau: {report.name} (s={report.s}, p={report.p}, order residual {report.order_residual:.3e})")
    click.echo(f"RK1: {'pass' if report.rk1 else 'FAIL'}  max|S| = {report.max_abs_s:.17g}  |S(inf)| = {abs(report.s_infinity):.17g}")
    click.echo(f"RK2: {'pass' if report.rk2 else 'FAIL'}  cond(alpha) = {report.alpha_condition:.6g}  min sigma(I - z alpha) = {report.min_singular_value:.6g}")
    for reason in report.reasons:
        click.echo(f"  reason: {reason}")


@blp.command("check-tableau")
@click.option("--name", default = None, help = "Shortcut for --tableau.name.")
@click.option("--json", "as_json", is_flag = True, help = "Print the report as JSON.")
@config_arguments
def cmd_check_tableau(cfg, name, as_json):
    '''Audit a Butcher tableau for A-stability (RK1 and RK2).'''
    try:
        tab = builtin_tableau(name) if name else tableau_from_config(cfg)
    except TableauError as exc:
        abort(2, str(exc))

    report = check_a_stability(tab)
    if as_json:
        click.echo(json.dumps(StabilityReportSchema().dump(report), sort_keys = True, indent = 2))
    else:
        _print_report(report)
    if not report.passed:
        abort(1, f"tableau '{tab.name}' failed the A-stability audit: {'; '.join(report.reasons)}")


@blp.command("integrate")
@config_arguments
def cmd_integrate(cfg):
    '''Integrate one trajectory and write per-step Y-norms.'''
    try:
        problem = build_problem(spec_from_config(cfg))
        tab = tableau_from_config(cfg)
        solver = solver_from_config(cfg)
        U0 = initial_data(problem, cfg["integrate_ell"], cfg["study_epsilon"])
        trajectory = integrate(problem, U0, cfg["integrate_h"], cfg["integrate_steps"], tab, solver,
                               stride = cfg["integrate_stride"])
    except StageConvergenceError as exc:
        abort(1, f"integration failed at {exc}")
    except (ProblemError, TableauError, ValueError) as exc:
        abort(2, str(exc))

    norms = [float(y_norm(problem, state.coeffs)) for state in trajectory]
    path = write_trajectory_csv(output_path(cfg, "trajectory.csv"), trajectory, norms, cfg)
    logger.info("Wrote %s", path)
    if cfg["integrate_dump_coefficients"]:
        path = write_coefficients(output_path(cfg, "coefficients.npz"), trajectory, cfg)
        logger.info("Wrote %s", path)
    click.echo(f"{trajectory.n_steps} steps, Y-norm {norms[0]:.17g} -> {norms[-1]:.17g}")
