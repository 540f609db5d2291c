'''
----------------------------
Result files: CSV, JSON, plot data,
trajectories and coefficient dumps
----------------------------
'''

import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd

from schemas import BoundsReportSchema, ProjectionErrorReportSchema, StudyResultSchema, StudyRowSchema, dump_config_text

TOOL_VERSION = "0.1.0"

STUDY_COLUMNS = ["ell", "h", "n_steps", "err_max", "err_final", "q_est", "q_pred", "fit_residual", "solver_iters_mean"]
TRAJECTORY_COLUMNS = ["step", "t", "y_norm", "solver_iters"]
# Full double precision
FLOAT_FORMAT = "%.17g"


def config_hash(cfg):
    return hashlib.sha256(dump_config_text(cfg).encode("utf-8")).hexdigest()


def config_header(cfg):
    return f"# rkscale {TOOL_VERSION} config-sha256={config_hash(cfg)}"


def output_path(cfg, suffix):
    return Path(cfg["output_dir"]) / f"{cfg['output_prefix']}_{suffix}"


def _prepare(path):
    path = Path(path)
    path.parent.mkdir(parents = True, exist_ok = True)
    return path


def _write_frame(path, cfg, frame, comments = ()):
    path = _prepare(path)
    with open(path, "w", encoding = "utf-8", newline = "\n") as handle:
        handle.write(config_header(cfg) + "\n")
        for comment in comments:
            handle.write(f"# {comment}\n")
        frame.to_csv(handle, index = False, float_format = FLOAT_FORMAT, lineterminator = "\n", na_rep = "nan")
    return path


def _write_json(path, cfg, payload):
    path = _prepare(path)
    document = {"tool": f"rkscale {TOOL_VERSION}", "config_sha256": config_hash(cfg), **payload}
    path.write_text(json.dumps(document, sort_keys = True, indent = 2) + "\n", encoding = "utf-8")
    return path


# *** Study ***

def study_frame(result):
    records = []
    for row in result.rows:
        summary = result.summary_for(row.ell)
        records.append({
            "ell": row.ell,
            "h": row.h,
            "n_steps": row.n_steps,
            "err_max": row.err_max,
            "err_final": row.err_final,
            "q_est": summary.q_est,
            "q_pred": summary.q_pred,
            "fit_residual": summary.fit_residual,
            "solver_iters_mean": row.solver_iters_mean,
        })
    return pd.DataFrame.from_records(records, columns = STUDY_COLUMNS)


def write_study_csv(path, result, cfg):
    # Failed rows stay in the table (with nan errors) and are also named in a comment
    comments = [f"failed ell={row.ell:.17g} h={row.h:.17g}: {row.failure}" for row in result.failed_rows]
    return _write_frame(path, cfg, study_frame(result), comments)


def write_study_json(path, result, cfg):
    payload = StudyResultSchema().dump(result)
    if not result.config.per_step:
        payload["rows"] = StudyRowSchema(many = True, exclude = ("errors",)).dump(result.rows)
    payload["config"] = dict(line.split("=", 1) for line in dump_config_text(cfg).splitlines())
    return _write_json(path, cfg, payload)


def write_plot_data(path, result, cfg):
    # Two "ell value" series blocks separated by a double blank line
    path = _prepare(path)
    lines = [config_header(cfg), "# series: q_est", "# ell q_est"]
    lines += [f"{s.ell:.17g} {s.q_est:.17g}" for s in result.summaries]
    lines += ["", "", "# series: q_pred", "# ell q_pred"]
    lines += [f"{s.ell:.17g} {s.q_pred:.17g}" for s in result.summaries]
    path.write_text("\n".join(lines) + "\n", encoding = "utf-8")
    return path


# *** Single runs ***

def write_trajectory_csv(path, trajectory, norms, cfg):
    # Iterations of the step that produced each recorded state, 0 for the initial one
    iterations = np.concatenate([[0], trajectory.iterations])[trajectory.steps]
    frame = pd.DataFrame({
        "step": trajectory.steps,
        "t": trajectory.times,
        "y_norm": norms,
        "solver_iters": iterations,
    }, columns = TRAJECTORY_COLUMNS)
    return _write_frame(path, cfg, frame)


def write_coefficients(path, trajectory, cfg):
    path = _prepare(path)
    np.savez_compressed(
        path,
        header = np.array(config_header(cfg)),
        steps = trajectory.steps,
        times = trajectory.times,
        coefficients = np.stack([state.coeffs for state in trajectory.states]),
    )
    return path


def write_bounds_json(path, semigroup, resolvent, cfg):
    payload = BoundsReportSchema().dump({
        "omega": semigroup.omega,
        "tableau": resolvent.tableau,
        "semigroup": semigroup.entries,
        "resolvent": resolvent.entries,
    })
    return _write_json(path, cfg, payload)


def write_projection_json(path, reports, cfg):
    return _write_json(path, cfg, {"reports": ProjectionErrorReportSchema(many = True).dump(reports)})
