'''
----------------------------
Convergence studies: trajectory errors, order fits,
the predicted order curve and operator-bound diagnostics
----------------------------
'''

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np
import scipy.linalg

from exceptions import AlignmentError, ProblemError, RkscaleError, SaturationError, TableauError, abort
from models import (
    EllSummary,
    ErrorNorm,
    OrderFit,
    ResolventBoundEntry,
    ResolventBoundReport,
    SemigroupBoundEntry,
    SemigroupBoundReport,
    StudyConfig,
    StudyResult,
    StudyRow,
)
from models.field import domain_factor
from outputs import output_path, write_bounds_json, write_plot_data, write_study_csv, write_study_json
from resources.problems import build_problem, initial_data, spec_from_config
from resources.rk import _kron_blocks, integrate, solver_from_config, tableau_from_config
from resources.spectral_core import scale_weights, weighted_norm
from schemas import config_arguments

logger = logging.getLogger(__name__)

blp = click.Group("study", help = "Convergence studies and operator bounds")

# Relative tolerance for matching a comparison time with a reference time
ALIGNMENT_TOLERANCE = 1e-9
# Largest accepted max/min ratio of sup / h^epsilon across the step grid
CONSTANT_SPREAD_LIMIT = 10.0
SLOPE_SLACK = 0.05


# *** Errors and fits ***

def step_count(T, h):
    return int(math.floor(T / h + 1e-9))


def reference_stride(h, h_ref):
    # Reference substeps per step of size h, so the reference lands on every t_n exactly
    return max(1, int(round(h / h_ref)))


def is_reference_multiple(h, h_ref):
    ratio = h / h_ref
    return round(ratio) >= 1 and abs(ratio - round(ratio)) <= ALIGNMENT_TOLERANCE * ratio


def shared_reference_stride(h_list, h_ref):
    '''Recording stride of a single reference run at h_ref that holds a state at
    every t_n of each h in h_list that is a whole multiple of h_ref.
    None when no h is such a multiple.'''
    ratios = [int(round(h / h_ref)) for h in h_list if is_reference_multiple(h, h_ref)]
    return math.gcd(*ratios) if ratios else None


def error_norm(problem, coeffs, ell = 0.0):
    # Y_ell norm of coefficient arrays (..., d, N)
    weights = scale_weights(problem.N, problem.scale_offsets(ell))
    return weighted_norm(coeffs, weights, domain_factor(problem.basis))


def trajectory_error(problem, U0, h, T, reference, tab, cfg = None, norm_ell = 0.0, trajectory = None):
    '''E^n = || reference(t_n) - (Psi^h)^n(U0) || at every t_n = n h <= T.
    Pass an already integrated trajectory to skip the integration.
    Returns (errors, max over n, value at the last t_n).'''
    if trajectory is None:
        trajectory = integrate(problem, U0, h, step_count(T, h), tab, cfg)
    reference_index = {int(step): index for index, step in enumerate(reference.steps)}

    differences = []
    for index, (step, t) in enumerate(zip(trajectory.steps, trajectory.times)):
        if step == 0 or t > T * (1 + ALIGNMENT_TOLERANCE):
            continue
        ref_step = int(round(t / reference.h)) if reference.h > 0 else 0
        ref_position = reference_index.get(ref_step)
        if ref_position is None or abs(reference.times[ref_position] - t) > ALIGNMENT_TOLERANCE * max(1.0, t):
            raise AlignmentError(f"Reference has no state at t={t:.17g}", time = float(t))
        differences.append(reference.states[ref_position].coeffs - trajectory.states[index].coeffs)

    if not differences:
        return np.array([]), float("nan"), float("nan")
    errors = error_norm(problem, np.stack(differences), norm_ell)
    return errors, float(errors.max()), float(errors[-1])


def estimate_order(pairs):
    # Least squares fit of log E = log c + q log h; returns slope q, log c and max abs residual
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError(f"At least two (h, E) pairs are needed, got {len(pairs)}")
    h, errors = np.array(pairs, dtype = float).T
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise SaturationError(f"Errors must be positive and finite to fit an order, got minimum {errors.min():.3e}")
    if np.unique(h).size < 2:
        raise ValueError("Step sizes must not all coincide")
    log_h, log_e = np.log(h), np.log(errors)
    slope, intercept = np.polyfit(log_h, log_e, 1)
    residual = float(np.max(np.abs(log_e - (intercept + slope * log_h))))
    return OrderFit(slope = float(slope), intercept = float(intercept), residual = residual)


def predicted_order(ell, p):
    if ell < 0 or p < 1:
        raise ValueError(f"Need ell >= 0 and p >= 1, got ell={ell}, p={p}")
    return min(float(p), p * ell / (p + 1))


# *** Study engine ***

def _shared_reference(problem, cfg, ell, U0, h_list, h_ref):
    # (reference trajectory or None, failure message or None)
    stride = shared_reference_stride(h_list, h_ref)
    if stride is None:
        return None, None
    try:
        reference = integrate(problem, U0, h_ref, step_count(cfg.T, h_ref), cfg.tableau, cfg.solver, stride = stride)
    except (RkscaleError, ValueError) as exc:
        logger.warning("Reference run for ell=%g failed: %s", ell, exc)
        return None, f"reference run: {exc}"
    logger.debug("ell=%g: reference at h_ref=%g recorded every %d steps", ell, h_ref, stride)
    return reference, None


def _run_row(problem, cfg, ell, U0, h, h_ref, reference = None):
    # Without a shared reference, one is integrated at h / stride for this h alone
    n_steps = step_count(cfg.T, h)
    norm_ell = ell if cfg.error_norm == ErrorNorm.Y_ELL else 0.0
    try:
        trajectory = integrate(problem, U0, h, n_steps, cfg.tableau, cfg.solver)
        if reference is None:
            stride = reference_stride(h, h_ref)
            reference = integrate(problem, U0, h / stride, n_steps * stride, cfg.tableau, cfg.solver, stride = stride)
        errors, err_max, err_final = trajectory_error(
            problem, U0, h, cfg.T, reference, cfg.tableau, cfg.solver, norm_ell, trajectory = trajectory,
        )
    except (RkscaleError, ValueError) as exc:
        logger.warning("Row ell=%g h=%g failed: %s", ell, h, exc)
        return StudyRow(ell = ell, h = h, n_steps = n_steps, failure = str(exc))

    logger.info("ell=%g h=%g: %d steps, err_max=%.6e err_final=%.6e", ell, h, n_steps, err_max, err_final)
    return StudyRow(
        ell = ell,
        h = h,
        n_steps = n_steps,
        err_max = err_max,
        err_final = err_final,
        solver_iters_mean = trajectory.mean_iterations,
        errors = errors,
    )


def _run_ell(problem, cfg, ell):
    h_list, h_ref = cfg.steps_for(ell)
    U0 = initial_data(problem, ell, cfg.epsilon)
    reference, failure = _shared_reference(problem, cfg, ell, U0, h_list, h_ref)
    rows = []
    for h in sorted(h_list):
        if failure:
            rows.append(StudyRow(ell = ell, h = h, n_steps = step_count(cfg.T, h), failure = failure))
        elif reference is not None and is_reference_multiple(h, h_ref):
            rows.append(_run_row(problem, cfg, ell, U0, h, h_ref, reference))
        else:
            rows.append(_run_row(problem, cfg, ell, U0, h, h_ref))

    q_pred = predicted_order(ell, cfg.tableau.p)
    completed = [(row.h, row.err_max) for row in rows if not row.failed]
    try:
        fit = estimate_order(completed)
    except (SaturationError, ValueError) as exc:
        logger.warning("No order fitted for ell=%g: %s", ell, exc)
        return rows, EllSummary(ell = ell, q_pred = q_pred, reason = str(exc))

    logger.info("ell=%g: q_est=%.4f q_pred=%.4f (residual %.3e)", ell, fit.slope, q_pred, fit.residual)
    return rows, EllSummary(ell = ell, q_pred = q_pred, fit = fit)


def run_study(cfg):
    started = time.perf_counter()
    problem = build_problem(cfg.problem)
    ells = sorted(set(cfg.ell_list))

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers = cfg.workers) as pool:
            outcomes = list(pool.map(lambda ell: _run_ell(problem, cfg, ell), ells))
    else:
        outcomes = [_run_ell(problem, cfg, ell) for ell in ells]

    rows = sorted((row for row_list, _ in outcomes for row in row_list), key = lambda row: (row.ell, row.h))
    summaries = tuple(sorted((summary for _, summary in outcomes), key = lambda summary: summary.ell))
    return StudyResult(config = cfg, rows = tuple(rows), summaries = summaries, runtime = time.perf_counter() - started)


def study_config_from(cfg):
    return StudyConfig(
        problem = spec_from_config(cfg),
        tableau = tableau_from_config(cfg),
        solver = solver_from_config(cfg),
        T = cfg["study_T"],
        ell_list = cfg["study_ell"],
        h_list = cfg["study_h"],
        h_list_ell0 = cfg["study_h_ell0"],
        h_ref = cfg["study_h_ref"],
        h_ref_ell0 = cfg["study_h_ref_ell0"],
        epsilon = cfg["study_epsilon"],
        error_norm = cfg["study_error_norm"],
        workers = cfg["study_workers"],
        per_step = cfg["study_per_step"],
    )


# *** Operator bounds ***

def _mode_weights(problem, epsilon):
    # max(|lambda_k|, 1)^epsilon, the Y_epsilon -> Y scaling of mode k
    return np.maximum(problem.spectrum.moduli, 1.0) ** epsilon


def semigroup_continuity_check(problem, epsilon_list, T_list):
    # Y-orthonormal coordinates make the operator norm a plain spectral norm per mode
    spectrum = problem.spectrum
    omega = spectrum.omega
    identity = np.eye(spectrum.d)
    entries = []
    for T in sorted(T_list):
        if T < 0:
            raise ValueError(f"Semigroup time must be non-negative, got {T}")
        norms = np.linalg.norm(scipy.linalg.expm(T * spectrum.normal_blocks) - identity, ord = 2, axis = (-2, -1))
        for epsilon in epsilon_list:
            if not 0 <= epsilon <= 1:
                raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
            sup = float(np.max(norms / _mode_weights(problem, epsilon)))
            scale = T ** epsilon
            entries.append(SemigroupBoundEntry(
                epsilon = float(epsilon),
                T = float(T),
                sup = sup,
                bound = (1 + 2 * math.exp(T * omega)) * scale,
                constant = sup / scale if scale > 0 else 0.0,
            ))
    report = SemigroupBoundReport(omega = omega, entries = tuple(entries))
    for entry in report.violations:
        logger.warning("Semigroup bound violated at epsilon=%g T=%g: %.6g > %.6g", entry.epsilon, entry.T, entry.sup, entry.bound)
    return report


def resolvent_norms(tab, problem, h):
    # (sup-norms of (I - h alpha (x) A_k)^{-1} - I per mode, sup-norms of the inverse) in Y-orthonormal coordinates
    spectrum = problem.spectrum
    size = tab.s * spectrum.d
    matrices = np.eye(size) - h * _kron_blocks(tab.a, spectrum.normal_blocks)
    condition = np.linalg.cond(matrices)
    if not np.all(np.isfinite(condition)) or np.max(condition) > 1e14:
        raise TableauError(f"I - h alpha (x) A_k is singular for some mode at h={h}")
    inverses = np.linalg.inv(matrices)
    differences = np.linalg.norm(inverses - np.eye(size), ord = 2, axis = (-2, -1))
    return differences, np.linalg.norm(inverses, ord = 2, axis = (-2, -1))


def resolvent_continuity_check(tab, problem, epsilon_list, h_list):
    h_values = np.array(sorted(h_list), dtype = float)
    # h = 0 is reported (its sup is 0) but stays out of the log-log fit
    fitted = h_values > 0
    if np.any(h_values < 0) or np.count_nonzero(fitted) < 2:
        raise ValueError("Need non-negative steps, at least two of them positive, to fit the growth in h")
    per_h = []
    singular = {}
    for h in h_values:
        try:
            per_h.append(resolvent_norms(tab, problem, h))
        except TableauError as exc:
            singular[h] = str(exc)
            per_h.append((np.full(problem.N, np.nan), np.full(problem.N, np.nan)))

    resolvent_norm = np.array([float(np.max(inverse)) for _, inverse in per_h])
    entries = []
    for epsilon in epsilon_list:
        if not 0 <= epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
        weights = _mode_weights(problem, epsilon)
        sup = np.array([float(np.max(difference / weights)) for difference, _ in per_h])
        reasons = list(singular.values())

        slope = float("nan")
        spread = float("nan")
        if not singular:
            slope = float(np.polyfit(np.log(h_values[fitted]), np.log(sup[fitted]), 1)[0])
            constants = sup[fitted] / h_values[fitted] ** epsilon
            spread = float(constants.max() / constants.min())
            if slope < epsilon - SLOPE_SLACK:
                reasons.append(f"h-slope {slope:.4f} below {epsilon - SLOPE_SLACK:.2f}")
            if spread > CONSTANT_SPREAD_LIMIT:
                reasons.append(f"constant sup/h^epsilon varies by a factor {spread:.3g}")
            if epsilon == 0 and np.any(sup > resolvent_norm + 1 + 1e-12):
                reasons.append("sup exceeds Lambda + 1")

        entries.append(ResolventBoundEntry(
            epsilon = float(epsilon),
            h = h_values,
            sup = sup,
            resolvent_norm = resolvent_norm,
            slope = slope,
            constant_spread = spread,
            reasons = tuple(reasons),
        ))
    report = ResolventBoundReport(tableau = tab.name, entries = tuple(entries))
    for entry in report.violations:
        logger.warning("Resolvent bound violated at epsilon=%g: %s", entry.epsilon, "; ".join(entry.reasons))
    return report


# *** Commands ***

@blp.command("study")
@config_arguments
def cmd_study(cfg):
    '''Run the (ell, h) convergence study and write CSV, JSON and plot data.'''
    try:
        study_cfg = study_config_from(cfg)
        result = run_study(study_cfg)
    except (ProblemError, TableauError, ValueError) as exc:
        abort(2, str(exc))

    path = write_study_csv(output_path(cfg, "study.csv"), result, cfg)
    logger.info("Wrote %s", path)
    if cfg["output_json"]:
        path = write_study_json(output_path(cfg, "study.json"), result, cfg)
        logger.info("Wrote %s", path)
    if cfg["output_plot_data"]:
        path = write_plot_data(output_path(cfg, "plot.dat"), result, cfg)
        logger.info("Wrote %s", path)

    click.echo("ell      q_est      q_pred")
    for summary in result.summaries:
        click.echo(f"{summary.ell:<8g} {summary.q_est:<10.4f} {summary.q_pred:.4f}")
    if not result.completed:
        failed = ", ".join(f"(ell={row.ell:g}, h={row.h:g})" for row in result.failed_rows)
        abort(1, f"study incomplete; failed rows: {failed or 'none'}; unfitted ell: "
                 f"{', '.join(f'{s.ell:g}' for s in result.summaries if s.fit is None) or 'none'}")


@blp.command("bounds")
@config_arguments
def cmd_bounds(cfg):
    '''Check the semigroup and resolvent continuity bounds on Y_epsilon -> Y.'''
    try:
        problem = build_problem(spec_from_config(cfg))
        tab = tableau_from_config(cfg)
        semigroup = semigroup_continuity_check(problem, cfg["bounds_epsilon"], cfg["bounds_T"])
        resolvent = resolvent_continuity_check(tab, problem, cfg["bounds_epsilon"], cfg["bounds_h"])
    except (ProblemError, TableauError, ValueError) as exc:
        abort(2, str(exc))

    click.echo(f"semigroup (omega={semigroup.omega:g})")
    for entry in semigroup.entries:
        status = "ok" if entry.ok else "VIOLATED"
        click.echo(f"  epsilon={entry.epsilon:g} T={entry.T:g}: sup={entry.sup:.6g} bound={entry.bound:.6g} {status}")
    click.echo(f"resolvent ({resolvent.tableau})")
    for entry in resolvent.entries:
        status = "ok" if entry.ok else "VIOLATED: " + "; ".join(entry.reasons)
        click.echo(f"  epsilon={entry.epsilon:g}: slope={entry.slope:.4f} spread={entry.constant_spread:.3g} {status}")

    if cfg["output_json"]:
        path = write_bounds_json(output_path(cfg, "bounds.json"), semigroup, resolvent, cfg)
        logger.info("Wrote %s", path)
    violations = len(semigroup.violations) + len(resolvent.violations)
    if violations:
        abort(1, f"{violations} operator bound violation(s)")
