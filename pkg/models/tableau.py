from dataclasses import dataclass
from functools import lru_cache
from math import prod

import numpy as np

from exceptions import TableauError
from models.field import frozen_array
from models.state import StateVector

ORDER_TOLERANCE = 1e-12


def _canonical(children):
    return tuple(sorted(children))


def _grow(tree):
    # Every tree obtained by attaching one leaf to some vertex of tree
    yield _canonical(tree + ((),))
    for index, child in enumerate(tree):
        for grown in _grow(child):
            yield _canonical(tree[:index] + (grown,) + tree[index + 1:])


@lru_cache(maxsize = None)
def rooted_trees(order):
    # Rooted trees with exactly `order` vertices, a tree being the sorted tuple of its subtrees
    if order < 1:
        return ()
    if order == 1:
        return ((),)
    return tuple(sorted({grown for tree in rooted_trees(order - 1) for grown in _grow(tree)}))


def tree_order(tree):
    return 1 + sum(tree_order(child) for child in tree)


def tree_density(tree):
    return tree_order(tree) * prod(tree_density(child) for child in tree)


def _stage_weights(a, tree):
    weights = np.ones(a.shape[0])
    for child in tree:
        weights = weights * (a @ _stage_weights(a, child))
    return weights


def order_condition_residuals(a, b, order):
    # |b . Phi(t) - 1/gamma(t)| for every rooted tree t with at most `order` vertices
    residuals = []
    for n in range(1, order + 1):
        for tree in rooted_trees(n):
            residuals.append(abs(float(b @ _stage_weights(a, tree)) - 1.0 / tree_density(tree)))
    return np.array(residuals)


@dataclass(frozen = True, eq = False)
class ButcherTableau:
    # Stage coefficients alpha, s x s
    a: np.ndarray
    # Quadrature weights, length s
    b: np.ndarray
    # Classical order
    p: int
    name: str = "inline"

    def __post_init__(self):
        try:
            a = frozen_array(self.a, dtype = float)
            b = frozen_array(self.b, dtype = float)
        except (TypeError, ValueError) as exc:
            raise TableauError(f"Tableau '{self.name}' has non-numeric coefficients: {exc}") from exc
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise TableauError(f"Tableau '{self.name}': a must be a non-empty square matrix, got shape {a.shape}")
        if b.shape != (a.shape[0],):
            raise TableauError(f"Tableau '{self.name}': b must have length {a.shape[0]}, got shape {b.shape}")
        if int(self.p) < 1:
            raise TableauError(f"Tableau '{self.name}': order p must be at least 1, got {self.p}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "p", int(self.p))

        residual = float(np.max(order_condition_residuals(a, b, self.p)))
        if residual > ORDER_TOLERANCE:
            raise TableauError(
                f"Tableau '{self.name}' violates the order conditions for p={self.p} (residual {residual:.3e})"
            )

    @property
    def s(self):
        return self.a.shape[0]

    # Nodes c = alpha . 1
    @property
    def c(self):
        return self.a.sum(axis = 1)

    def order_residual(self, order = None):
        return float(np.max(order_condition_residuals(self.a, self.b, order or self.p)))


@dataclass(frozen = True)
class StageSolveConfig:
    rel_tol: float = 1e-12
    max_iter: int = 100
    # Largest step accepted by solve_stages / step
    h_max: float = 0.25

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if not self.h_max > 0:
            raise ValueError(f"h_max must be positive, got {self.h_max}")


@dataclass(frozen = True, eq = False)
class StageVector:
    # s stages stacked as (s, d, N)
    coeffs: np.ndarray
    template: StateVector
    iterations: int = 0
    # Last fixed-point update, max over stages in the Y-norm
    residual: float = 0.0

    def __post_init__(self):
        coeffs = frozen_array(self.coeffs)
        if coeffs.ndim != 3 or coeffs.shape[1:] != self.template.coeffs.shape:
            raise ValueError(f"Stage coefficients of shape {coeffs.shape} do not match the state layout")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def s(self):
        return self.coeffs.shape[0]

    @property
    def stages(self):
        return tuple(self.template.with_coeffs(stage) for stage in self.coeffs)
