import functools
import logging
from pathlib import Path

import click
from dotenv import dotenv_values
from marshmallow import RAISE, Schema, ValidationError, fields, validate, validates_schema
from webargs.fields import DelimitedList

from exceptions import abort

logger = logging.getLogger(__name__)

# --- Configuration: one flat schema, every key dotted as "<section>.<name>" ---

FloatList = functools.partial(DelimitedList, fields.Float())

PROBLEM_KINDS = ["wave", "wave_inhomogeneous", "nls"]
BOUNDARY_CONDITIONS = ["periodic", "dirichlet", "neumann"]
TABLEAU_NAMES = ["midpoint", "gauss2", "gauss3", "inline"]


class CliConfigSchema(Schema):
    class Meta:
        # A misspelt key is an error, never a silent default
        unknown = RAISE

    # Problem
    problem_kind = fields.Str(data_key = "problem.kind", load_default = "wave", validate = validate.OneOf(PROBLEM_KINDS))
    problem_bc = fields.Str(data_key = "problem.bc", load_default = "periodic", validate = validate.OneOf(BOUNDARY_CONDITIONS))
    # V' (wave) or f in dV/d(conj u) = f(|u|^2) u (nls), lowest degree first
    problem_potential = FloatList(data_key = "problem.potential", load_default = lambda: [0.0, 1.0, -4.0])
    problem_alpha = fields.Float(data_key = "problem.alpha", load_default = 0.75)
    # Cosine coefficients of a(x) and b(x) for wave_inhomogeneous
    problem_a = FloatList(data_key = "problem.a", load_default = lambda: [1.0], validate = validate.Length(min = 1))
    problem_b = FloatList(data_key = "problem.b", load_default = lambda: [0.0], validate = validate.Length(min = 1))
    problem_N = fields.Int(data_key = "problem.N", load_default = 1000, validate = validate.Range(min = 4))
    problem_max_degree = fields.Int(data_key = "problem.max_degree", load_default = 10, validate = validate.Range(min = 0))
    problem_strict_bc = fields.Bool(data_key = "problem.strict_bc", load_default = False)
    problem_dealias = fields.Bool(data_key = "problem.dealias", load_default = False)

    # Method; "inline" reads a (row-major), b and p
    tableau_name = fields.Str(data_key = "tableau.name", load_default = "midpoint", validate = validate.OneOf(TABLEAU_NAMES))
    tableau_a = FloatList(data_key = "tableau.a", load_default = None, allow_none = True)
    tableau_b = FloatList(data_key = "tableau.b", load_default = None, allow_none = True)
    tableau_p = fields.Int(data_key = "tableau.p", load_default = None, allow_none = True, validate = validate.Range(min = 1))

    # Stage solver
    solver_rel_tol = fields.Float(data_key = "solver.rel_tol", load_default = 1e-12, validate = validate.Range(min = 0, min_inclusive = False))
    solver_max_iter = fields.Int(data_key = "solver.max_iter", load_default = 100, validate = validate.Range(min = 1))
    solver_h_max = fields.Float(data_key = "solver.h_max", load_default = 0.25, validate = validate.Range(min = 0, min_inclusive = False))

    # Convergence study
    study_T = fields.Float(data_key = "study.T", load_default = 0.5, validate = validate.Range(min = 0, min_inclusive = False))
    study_ell = DelimitedList(
        fields.Float(validate = validate.Range(min = 0)),
        data_key = "study.ell",
        load_default = lambda: [0.5 * j for j in range(7)],
        validate = validate.Length(min = 1),
    )
    study_h = FloatList(
        data_key = "study.h",
        load_default = lambda: [round(0.1 - 0.005 * j, 12) for j in range(11)],
        validate = validate.Length(min = 1),
    )
    # Step grid used for ell = 0
    study_h_ell0 = FloatList(
        data_key = "study.h_ell0",
        load_default = lambda: [round(0.1 - 0.01 * j, 12) for j in range(6)],
        validate = validate.Length(min = 1),
    )
    study_h_ref = fields.Float(data_key = "study.h_ref", load_default = 1e-3, validate = validate.Range(min = 0, min_inclusive = False))
    study_h_ref_ell0 = fields.Float(data_key = "study.h_ref_ell0", load_default = 1e-4, validate = validate.Range(min = 0, min_inclusive = False))
    study_epsilon = fields.Float(data_key = "study.epsilon", load_default = 1e-8, validate = validate.Range(min = 0, min_inclusive = False))
    study_error_norm = fields.Str(data_key = "study.error_norm", load_default = "Y", validate = validate.OneOf(["Y", "Yell"]))
    study_workers = fields.Int(data_key = "study.workers", load_default = 1, validate = validate.Range(min = 1))
    # Keep per-step errors in the JSON output
    study_per_step = fields.Bool(data_key = "study.per_step", load_default = False)

    # Single trajectory
    integrate_h = fields.Float(data_key = "integrate.h", load_default = 0.05, validate = validate.Range(min = 0))
    integrate_steps = fields.Int(data_key = "integrate.steps", load_default = 10, validate = validate.Range(min = 0))
    integrate_ell = fields.Float(data_key = "integrate.ell", load_default = 0.0, validate = validate.Range(min = 0))
    integrate_stride = fields.Int(data_key = "integrate.stride", load_default = 1, validate = validate.Range(min = 1))
    integrate_dump_coefficients = fields.Bool(data_key = "integrate.dump_coefficients", load_default = False)

    # Galerkin projection errors
    galerkin_m = DelimitedList(
        fields.Float(validate = validate.Range(min = 0)),
        data_key = "galerkin.m",
        load_default = lambda: [8.0, 16.0, 32.0, 64.0],
        validate = validate.Length(min = 2),
    )
    galerkin_ell = fields.Float(data_key = "galerkin.ell", load_default = 1.0, validate = validate.Range(min = 0))
    galerkin_T = fields.Float(data_key = "galerkin.T", load_default = 0.5, validate = validate.Range(min = 0, min_inclusive = False))
    galerkin_h = fields.Float(data_key = "galerkin.h", load_default = 0.05, validate = validate.Range(min = 0, min_inclusive = False))
    galerkin_h_ref = fields.Float(data_key = "galerkin.h_ref", load_default = 1e-3, validate = validate.Range(min = 0, min_inclusive = False))

    # Operator-bound diagnostics
    bounds_epsilon = DelimitedList(
        fields.Float(validate = validate.Range(min = 0, max = 1)),
        data_key = "bounds.epsilon",
        load_default = lambda: [0.0, 0.25, 0.5, 1.0],
        validate = validate.Length(min = 1),
    )
    bounds_T = DelimitedList(
        fields.Float(validate = validate.Range(min = 0)),
        data_key = "bounds.T",
        load_default = lambda: [0.01, 0.1, 1.0],
        validate = validate.Length(min = 1),
    )
    bounds_h = DelimitedList(
        fields.Float(validate = validate.Range(min = 0, min_inclusive = False)),
        data_key = "bounds.h",
        load_default = lambda: [0.025, 0.05, 0.1, 0.2],
        validate = validate.Length(min = 2),
    )

    # Files
    output_dir = fields.Str(data_key = "output.dir", load_default = "results")
    output_prefix = fields.Str(data_key = "output.prefix", load_default = "rkscale", validate = validate.Length(min = 1))
    output_json = fields.Bool(data_key = "output.json", load_default = True)
    output_plot_data = fields.Bool(data_key = "output.plot_data", load_default = True)

    @validates_schema(skip_on_field_errors = True)
    def check_consistency(self, data, **kwargs):
        if data["problem_N"] % 2:
            raise ValidationError("Grid size must be even.", field_name = "problem.N")
        if data["problem_kind"] == "nls" and not data["problem_alpha"] > 0.5:
            raise ValidationError("NLS scale offset must exceed 0.5.", field_name = "problem.alpha")
        if min(data["study_h"]) <= data["study_h_ref"]:
            raise ValidationError("Every step must exceed study.h_ref.", field_name = "study.h")
        if min(data["study_h_ell0"]) <= data["study_h_ref_ell0"]:
            raise ValidationError("Every step must exceed study.h_ref_ell0.", field_name = "study.h_ell0")
        if data["tableau_name"] == "inline" and None in (data["tableau_a"], data["tableau_b"], data["tableau_p"]):
            raise ValidationError("An inline tableau needs tableau.a, tableau.b and tableau.p.", field_name = "tableau.name")


CONFIG_KEYS = {name: field.data_key for name, field in CliConfigSchema().fields.items()}


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def dump_config_text(cfg):
    # Effective config in the same key=value form it is read from
    dumped = CliConfigSchema().dump(cfg)
    lines = [f"{key}={_format_value(value)}" for key, value in dumped.items() if value is not None]
    return "\n".join(lines) + "\n"


def load_config(path = None, overrides = None, fast = False):
    # Schema defaults < config file < command line
    raw = dict(dotenv_values(path)) if path else {}
    raw.update(overrides or {})
    if fast and "problem.N" not in raw:
        raw["problem.N"] = "256"
    try:
        return CliConfigSchema().load(raw)
    except ValidationError as exc:
        problems = "; ".join(f"{key}: {' '.join(map(str, messages)) if isinstance(messages, list) else messages}"
                             for key, messages in sorted(exc.normalized_messages().items()))
        abort(2, f"Invalid configuration: {problems}")


def _default_help(field):
    default = field.load_default
    if callable(default):
        default = default()
    if default is None:
        return "unset by default"
    if isinstance(default, list):
        default = ",".join(map(str, default))
    return f"default: {_format_value(default)}"


def config_arguments(command):
    '''Adds --config, --dump-config, --fast and a --<section>.<key> option per config key.
    The command receives the validated config dict as its first argument.'''

    @functools.wraps(command)
    def wrapper(config, dump_config, fast, **options):
        overrides = {}
        for name, key in CONFIG_KEYS.items():
            value = options.pop(name, None)
            if value is not None:
                overrides[key] = value
        cfg = load_config(config, overrides, fast)
        if dump_config:
            Path(dump_config).write_text(dump_config_text(cfg), encoding = "utf-8")
            logger.info("Wrote effective config to %s", dump_config)
        return command(cfg, **options)

    for name, field in reversed(list(CliConfigSchema().fields.items())):
        # click needs an identifier next to the dotted flag
        wrapper = click.option(f"--{field.data_key}", name, default = None, help = _default_help(field))(wrapper)
    wrapper = click.option("--fast", is_flag = True, help = "Desk-scale profile: problem.N=256 unless set.")(wrapper)
    wrapper = click.option("--dump-config", "dump_config", type = click.Path(dir_okay = False), default = None,
                           help = "Write the effective config to this file.")(wrapper)
    wrapper = click.option("--config", "config", type = click.Path(exists = True, dir_okay = False), envvar = "RKSCALE_CONFIG",
                           default = None, help = "Flat key=value config file (env: RKSCALE_CONFIG).")(wrapper)
    return wrapper


# --- Result schemas: dump only ---

class StudyRowSchema(Schema):
    ell = fields.Float()
    h = fields.Float()
    n_steps = fields.Int()
    err_max = fields.Float()
    err_final = fields.Float()
    solver_iters_mean = fields.Float()
    # Failure reason, null when the row completed
    failure = fields.Str(allow_none = True)
    errors = fields.List(fields.Float(), allow_none = True)


class EllSummarySchema(Schema):
    ell = fields.Float()
    q_est = fields.Float()
    q_pred = fields.Float()
    fit_residual = fields.Float()
    intercept = fields.Method("get_intercept")
    reason = fields.Str(allow_none = True)

    def get_intercept(self, summary):
        return summary.fit.intercept if summary.fit else None


class StudyResultSchema(Schema):
    rows = fields.List(fields.Nested(StudyRowSchema()))
    summaries = fields.List(fields.Nested(EllSummarySchema()))
    runtime = fields.Float()
    completed = fields.Bool()


class StabilityReportSchema(Schema):
    name = fields.Str()
    s = fields.Int()
    p = fields.Int()
    order_residual = fields.Float()
    max_abs_s = fields.Float()
    # [real, imag]
    s_infinity = fields.Method("get_s_infinity")
    rk1 = fields.Bool()
    rk2 = fields.Bool()
    passed = fields.Bool()
    alpha_condition = fields.Float()
    min_singular_value = fields.Float()
    plan = fields.Dict()
    reasons = fields.List(fields.Str())

    def get_s_infinity(self, report):
        return [report.s_infinity.real, report.s_infinity.imag]


class SemigroupBoundEntrySchema(Schema):
    epsilon = fields.Float()
    T = fields.Float()
    sup = fields.Float()
    bound = fields.Float()
    constant = fields.Float()
    ok = fields.Bool()


class ResolventBoundEntrySchema(Schema):
    epsilon = fields.Float()
    h = fields.List(fields.Float())
    sup = fields.List(fields.Float())
    resolvent_norm = fields.List(fields.Float())
    slope = fields.Float()
    constant_spread = fields.Float()
    reasons = fields.List(fields.Str())
    ok = fields.Bool()


class BoundsReportSchema(Schema):
    omega = fields.Float()
    tableau = fields.Str()
    semigroup = fields.List(fields.Nested(SemigroupBoundEntrySchema()))
    resolvent = fields.List(fields.Nested(ResolventBoundEntrySchema()))


class ProjectionErrorReportSchema(Schema):
    kind = fields.Str()
    ell = fields.Float(allow_none = True)
    m = fields.List(fields.Float())
    errors = fields.List(fields.Float())
    final_errors = fields.List(fields.Float(), allow_none = True)
    slope = fields.Method("get_slope")
    intercept = fields.Method("get_intercept")

    def get_slope(self, report):
        return report.fit.slope if report.fit else None

    def get_intercept(self, report):
        return report.fit.intercept if report.fit else None
