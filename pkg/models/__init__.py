# Re-exported so callers can write "from models import StateVector, Problem"
from models.field import Basis, SpectralField, wavenumbers
from models.state import StateVector
from models.spectrum import OperatorSpectrum
from models.problem import ProblemKind, BoundaryCondition, ProblemSpec, Problem
from models.tableau import ButcherTableau, StageSolveConfig, StageVector, rooted_trees, tree_density
from models.trajectory import Trajectory
from models.study import (
    ErrorNorm,
    StudyConfig,
    StudyRow,
    OrderFit,
    EllSummary,
    StudyResult,
    SamplingPlan,
    StabilityReport,
    SemigroupBoundEntry,
    SemigroupBoundReport,
    ResolventBoundEntry,
    ResolventBoundReport,
    ProjectionErrorReport,
)
