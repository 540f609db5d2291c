'''
----------------------------
Galerkin truncation: projected nonlinearity and flows,
the m(h) coupling and projection-error decay
----------------------------
'''

import logging
import math

import click
import numpy as np

from exceptions import ProblemError, SaturationError, StageConvergenceError, TableauError, abort
from models import ProjectionErrorReport, StageSolveConfig
from outputs import output_path, write_projection_json
from resources.problems import build_problem, initial_data, nonlinear_term, spec_from_config
from resources.rk import integrate_coeffs, solver_from_config, step_coeffs, tableau_from_config, y_norm
from resources.spectral_core import project, projection_mask
from resources.study import estimate_order
from schemas import config_arguments

logger = logging.getLogger(__name__)

blp = click.Group("galerkin", help = "Galerkin-truncated flows")


def projected_rhs(problem, m):
    # B_m = P_m B P_m on coefficient arrays
    mask = projection_mask(problem.spectrum.moduli, m, "P")
    return lambda coeffs: np.where(mask, nonlinear_term(problem, np.where(mask, coeffs, 0.0)), 0.0)


def projected_nonlinearity(problem, state, m):
    return state.with_coeffs(projected_rhs(problem, m)(state.coeffs))


def integrate_projected(problem, U0, h, n_steps, m, tab, cfg = None, stride = 1):
    # Psi_m = psi_m o P_m iterated from P_m U0
    return integrate_coeffs(
        problem, project(U0, m, "P"), h, n_steps, tab, cfg,
        rhs = projected_rhs(problem, m), stride = stride,
    )


def coupling_m(h, p):
    if not h > 0:
        raise ValueError(f"Step must be positive, got {h}")
    if p < 1:
        raise ValueError(f"Order must be at least 1, got {p}")
    return math.ceil(h ** (-p / (p + 1)))


def _fit(m_values, errors):
    try:
        return estimate_order(list(zip(m_values, errors)))
    except SaturationError as exc:
        logger.warning("Projection errors saturated, no slope fitted: %s", exc)
        return None


def flow_projection_error(problem, U0, ell, T, m_list, h_ref, tab, cfg = None):
    n_steps = int(round(T / h_ref))
    full = integrate_coeffs(problem, U0, h_ref, n_steps, tab, cfg)
    full_coeffs = np.stack([state.coeffs for state in full.states])

    m_values = sorted(float(m) for m in m_list)
    errors = []
    final_errors = []
    for m in m_values:
        projected = integrate_projected(problem, U0, h_ref, n_steps, m, tab, cfg)
        difference = y_norm(problem, full_coeffs - np.stack([state.coeffs for state in projected.states]))
        errors.append(float(np.max(difference)))
        final_errors.append(float(difference[-1]))
        logger.info(
            "Flow projection ell=%g m=%g: max error %.3e, final error %.3e over %d steps",
            ell, m, errors[-1], final_errors[-1], n_steps,
        )

    return ProjectionErrorReport(
        "flow", np.array(m_values), np.array(errors), fit = _fit(m_values, errors), ell = ell,
        final_errors = np.array(final_errors),
    )


def method_projection_error(problem, U, h, m_list, tab, cfg = None, ell = None):
    cfg = cfg or StageSolveConfig()
    full, _ = step_coeffs(problem, U.coeffs, h, tab, cfg)
    m_values = sorted(float(m) for m in m_list)
    errors = []
    for m in m_values:
        projected, _ = step_coeffs(problem, project(U, m, "P").coeffs, h, tab, cfg, rhs = projected_rhs(problem, m))
        errors.append(float(y_norm(problem, full - projected)))

    return ProjectionErrorReport("method", np.array(m_values), np.array(errors), fit = _fit(m_values, errors), ell = ell)


# *** Commands ***

@blp.command("project")
@config_arguments
def cmd_project(cfg):
    '''Measure semiflow and one-step Galerkin projection errors against m.'''
    try:
        problem = build_problem(spec_from_config(cfg))
        tab = tableau_from_config(cfg)
        solver = solver_from_config(cfg)
        ell = cfg["galerkin_ell"]
        U0 = initial_data(problem, ell, cfg["study_epsilon"])
        reports = [
            flow_projection_error(problem, U0, ell, cfg["galerkin_T"], cfg["galerkin_m"], cfg["galerkin_h_ref"], tab, solver),
            method_projection_error(problem, U0, cfg["galerkin_h"], cfg["galerkin_m"], tab, solver, ell = ell),
        ]
    except StageConvergenceError as exc:
        abort(1, f"projected integration failed at {exc}")
    except (ProblemError, TableauError, ValueError) as exc:
        abort(2, str(exc))

    for report in reports:
        slope = f"{report.fit.slope:.6g}" if report.fit else "n/a"
        click.echo(f"{report.kind}: slope {slope} (expected about {-ell:g})")
        if report.final_errors is None:
            for m, error in zip(report.m, report.errors):
                click.echo(f"  m={m:g} error={error:.17g}")
        else:
            for m, error, final in zip(report.m, report.errors, report.final_errors):
                click.echo(f"  m={m:g} error={error:.17g} final={final:.17g}")

    if cfg["output_json"]:
        path = write_projection_json(output_path(cfg, "projection.json"), reports, cfg)
        logger.info("Wrote %s", path)
