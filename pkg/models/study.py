from dataclasses import dataclass, field

import numpy as np

from models.field import frozen_array
from models.problem import ProblemSpec
from models.tableau import ButcherTableau, StageSolveConfig


class ErrorNorm:
    Y = "Y"
    Y_ELL = "Yell"
    CHOICES = (Y, Y_ELL)


@dataclass(frozen = True)
class StudyConfig:
    problem: ProblemSpec
    tableau: ButcherTableau
    solver: StageSolveConfig = field(default_factory = StageSolveConfig)
    # Final time
    T: float = 0.5
    ell_list: tuple = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    h_list: tuple = tuple(round(0.1 - 0.005 * j, 12) for j in range(11))
    # Step grid and reference step used for ell = 0
    h_list_ell0: tuple = tuple(round(0.1 - 0.01 * j, 12) for j in range(6))
    h_ref: float = 1e-3
    h_ref_ell0: float = 1e-4
    # Regulariser of the initial-data decay exponent
    epsilon: float = 1e-8
    error_norm: str = ErrorNorm.Y
    workers: int = 1
    # Keep per-step errors in the JSON dump
    per_step: bool = False

    def __post_init__(self):
        for name in ("ell_list", "h_list", "h_list_ell0"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, values)
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.problem.N % 2:
            raise ValueError(f"N must be even, got {self.problem.N}")
        if min(self.ell_list) < 0:
            raise ValueError("Smoothness values must be non-negative")
        if min(self.h_list) <= self.h_ref:
            raise ValueError(f"Every h must exceed the reference step {self.h_ref}")
        if min(self.h_list_ell0) <= self.h_ref_ell0:
            raise ValueError(f"Every h used for ell=0 must exceed the reference step {self.h_ref_ell0}")
        if self.error_norm not in ErrorNorm.CHOICES:
            raise ValueError(f"Unknown error norm '{self.error_norm}'")
        if int(self.workers) < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    def steps_for(self, ell):
        # (step grid, reference step) used for one smoothness value
        if ell == 0:
            return self.h_list_ell0, self.h_ref_ell0
        return self.h_list, self.h_ref


@dataclass(frozen = True, eq = False)
class StudyRow:
    ell: float
    h: float
    n_steps: int
    err_max: float = float("nan")
    err_final: float = float("nan")
    solver_iters_mean: float = float("nan")
    # E^n for n = 1 .. n_steps
    errors: np.ndarray = None
    # Reason the row could not be computed, None when it completed
    failure: str = None

    @property
    def failed(self):
        return self.failure is not None


@dataclass(frozen = True)
class OrderFit:
    slope: float
    intercept: float
    residual: float


@dataclass(frozen = True)
class EllSummary:
    ell: float
    q_pred: float
    # None when fewer than two rows of this ell completed or the errors saturated
    fit: OrderFit = None
    reason: str = None

    @property
    def q_est(self):
        return self.fit.slope if self.fit else float("nan")

    @property
    def fit_residual(self):
        return self.fit.residual if self.fit else float("nan")


@dataclass(frozen = True, eq = False)
class StudyResult:
    config: StudyConfig
    # Sorted by (ell, h)
    rows: tuple
    # One per ell, sorted
    summaries: tuple
    runtime: float = 0.0

    @property
    def failed_rows(self):
        return tuple(row for row in self.rows if row.failed)

    @property
    def completed(self):
        return not self.failed_rows and all(summary.fit is not None for summary in self.summaries)

    def summary_for(self, ell):
        for summary in self.summaries:
            if summary.ell == ell:
                return summary
        raise KeyError(ell)


@dataclass(frozen = True, eq = False)
class SamplingPlan:
    # Points z = iy on the imaginary axis, including y = 0 and both signs
    imaginary_axis: np.ndarray
    # Points with Re z < 0
    left_half_plane: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "imaginary_axis", frozen_array(self.imaginary_axis))
        object.__setattr__(self, "left_half_plane", frozen_array(self.left_half_plane))

    @classmethod
    def default(cls, axis_points = 241, radial_points = 49, angles = 33):
        magnitudes = np.logspace(-6, 6, axis_points)
        axis = 1j * np.concatenate([-magnitudes[::-1], [0.0], magnitudes])
        radii = np.logspace(-6, 6, radial_points)
        # Open left half-plane: angles strictly between pi/2 and 3pi/2
        theta = np.linspace(np.pi / 2, 3 * np.pi / 2, angles + 2)[1:-1]
        grid = (radii[:, None] * np.exp(1j * theta[None, :])).ravel()
        return cls(axis, grid)

    @property
    def points(self):
        return np.concatenate([self.imaginary_axis, self.left_half_plane])

    def describe(self):
        axis = np.abs(self.imaginary_axis.imag)
        return {
            "imaginary_axis_points": int(self.imaginary_axis.size),
            "imaginary_axis_max": float(axis.max()),
            "left_half_plane_points": int(self.left_half_plane.size),
        }


@dataclass(frozen = True)
class StabilityReport:
    name: str
    s: int
    p: int
    order_residual: float
    max_abs_s: float
    s_infinity: complex
    rk1: bool
    rk2: bool
    alpha_condition: float
    min_singular_value: float
    plan: dict
    reasons: tuple = ()

    @property
    def passed(self):
        return self.rk1 and self.rk2


@dataclass(frozen = True)
class SemigroupBoundEntry:
    epsilon: float
    T: float
    # sup_k ||e^{T A_k} - I|| / max(|lambda_k|, 1)^epsilon
    sup: float
    bound: float
    # sup / T^epsilon, the constant actually attained
    constant: float

    @property
    def ok(self):
        return self.sup <= self.bound * (1 + 1e-12)


@dataclass(frozen = True)
class SemigroupBoundReport:
    omega: float
    entries: tuple

    @property
    def violations(self):
        return tuple(entry for entry in self.entries if not entry.ok)


@dataclass(frozen = True, eq = False)
class ResolventBoundEntry:
    epsilon: float
    h: np.ndarray
    # sup_k ||(I - h alpha x A_k)^{-1} - I|| / max(|lambda_k|, 1)^epsilon per h
    sup: np.ndarray
    # Lambda(h) = sup_k ||(I - h alpha x A_k)^{-1}||
    resolvent_norm: np.ndarray
    slope: float
    # max/min of sup / h^epsilon across the grid
    constant_spread: float
    reasons: tuple = ()

    @property
    def ok(self):
        return not self.reasons


@dataclass(frozen = True)
class ResolventBoundReport:
    tableau: str
    entries: tuple

    @property
    def violations(self):
        return tuple(entry for entry in self.entries if not entry.ok)


@dataclass(frozen = True, eq = False)
class ProjectionErrorReport:
    # "flow" (semiflow over [0, T]) or "method" (one step)
    kind: str
    m: np.ndarray
    errors: np.ndarray
    fit: OrderFit = None
    # Smoothness of the data the errors were measured on
    ell: float = None
    # Flow errors at t = T per m; the fit uses the sup over the steps
    final_errors: np.ndarray = None
