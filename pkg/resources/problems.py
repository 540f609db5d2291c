'''
----------------------------
Semilinear problems: wave and nonlinear Schroedinger
with periodic, Dirichlet and Neumann conditions
----------------------------
'''

import logging

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial

from exceptions import ProblemError
from models import Basis, BoundaryCondition, OperatorSpectrum, Problem, ProblemKind, ProblemSpec, StateVector, wavenumbers
from resources.spectral_core import (
    apply_blocks,
    dealias_mask,
    derivative_symbol,
    from_grid,
    grid,
    parity_leakage,
    restrict_to_basis,
    scale_norm,
    scale_weights,
    to_grid,
)

logger = logging.getLogger(__name__)

# Leakage into the wrong parity tolerated under strict boundary checks
PARITY_TOLERANCE = 1e-10


def _degree(coefficients):
    nonzero = np.flatnonzero(np.asarray(coefficients))
    return int(nonzero[-1]) if nonzero.size else 0


def cosine_series(coefficients, points):
    # sum_j c_j cos(j x)
    modes = np.arange(len(coefficients))
    return np.cos(np.outer(points, modes)) @ np.asarray(coefficients, dtype = float)


def _validate(spec):
    if spec.N < 4 or spec.N % 2:
        raise ProblemError(f"Grid size N must be even and at least 4, got {spec.N}")
    if spec.kind is ProblemKind.NLS and not spec.alpha > 0.5:
        raise ProblemError(f"NLS scale offset alpha must exceed 1/2, got {spec.alpha}")
    degree = _degree(spec.potential)
    if degree > spec.max_degree:
        raise ProblemError(f"Potential degree {degree} exceeds the configured maximum {spec.max_degree}")
    # V' must be odd to keep sine fields odd
    if spec.strict_bc and spec.is_wave and spec.bc is BoundaryCondition.DIRICHLET:
        even_powers = [j for j, c in enumerate(spec.potential) if j % 2 == 0 and c != 0]
        if even_powers:
            raise ProblemError(
                f"Dirichlet conditions need an odd V'; potential has even powers {even_powers}"
            )


def _wave_blocks(k):
    blocks = np.zeros((k.size, 2, 2), dtype = complex)
    blocks[:, 0, 1] = 1.0
    blocks[:, 1, 0] = -k ** 2
    # A = Q_0 A~: the Jordan block on k = 0 moves into B (sine fields have no zero mode at all)
    blocks[0] = 0.0
    return blocks


def _nls_blocks(k):
    blocks = np.zeros((k.size, 2, 2), dtype = complex)
    blocks[:, 0, 1] = -k ** 2
    blocks[:, 1, 0] = k ** 2
    return blocks


def build_problem(spec):
    _validate(spec)
    k = wavenumbers(spec.N)

    if spec.is_wave:
        offset_shifts, offset_rate = (1.0, 0.0), 1.0
        fold_zero_mode = spec.bc is not BoundaryCondition.DIRICHLET
        blocks = _wave_blocks(k)
    else:
        offset_shifts, offset_rate = (spec.alpha, spec.alpha), 2.0
        fold_zero_mode = False
        blocks = _nls_blocks(k)

    samples = {}
    if spec.kind is ProblemKind.WAVE_INHOMOGENEOUS:
        points = grid(spec.N)
        samples = {"a": cosine_series(spec.a, points), "b": cosine_series(spec.b, points)}
        if np.min(samples["a"]) <= 0:
            raise ProblemError(f"Coefficient a(x) must be positive on the grid, minimum is {np.min(samples['a']):.6g}")
        if np.max(samples["b"]) > 0:
            raise ProblemError(f"Coefficient b(x) must be non-positive on the grid, maximum is {np.max(samples['b']):.6g}")

    spectrum = OperatorSpectrum(
        blocks = blocks,
        moduli = np.abs(k) ** offset_rate,
        metric = scale_weights(spec.N, offset_shifts).T,
    )
    problem = Problem(
        spec = spec,
        spectrum = spectrum,
        offset_shifts = offset_shifts,
        offset_rate = offset_rate,
        folded_zero_mode = fold_zero_mode,
        coefficient_samples = samples,
    )
    logger.debug("Built %s problem, omega=%g", problem.describe(), spectrum.omega)
    return problem


# *** Nonlinearity ***

def _real_grid(coeffs, mask):
    if mask is not None:
        coeffs = coeffs * mask
    return to_grid(coeffs).real


def _wave_term(problem, coeffs, mask):
    u, v = coeffs[..., 0, :], coeffs[..., 1, :]
    u_grid = _real_grid(u, mask)
    result = np.zeros_like(coeffs, dtype = complex)
    result[..., 1, :] = -from_grid(polynomial.polyval(u_grid, problem.potential_coefficients()))

    if problem.kind is ProblemKind.WAVE_INHOMOGENEOUS:
        symbol = derivative_symbol(problem.N)
        samples = problem.coefficient_samples
        flux = samples["a"] * to_grid(symbol * u).real
        # d/dx(a du/dx) + b u - d^2u/dx^2
        result[..., 1, :] += symbol * from_grid(flux) + from_grid(samples["b"] * u_grid) - symbol ** 2 * u

    if problem.folded_zero_mode:
        # P_0 A~ U = (mean v, 0)
        result[..., 0, 0] = v[..., 0]
    return result


def _nls_term(problem, coeffs, mask):
    u = _real_grid(coeffs[..., 0, :], mask) + 1j * _real_grid(coeffs[..., 1, :], mask)
    # dV/d(conj u) = f(|u|^2) u
    g = polynomial.polyval(np.abs(u) ** 2, problem.potential_coefficients()) * u
    result = np.empty_like(coeffs, dtype = complex)
    result[..., 0, :] = from_grid(g.imag)
    result[..., 1, :] = -from_grid(g.real)
    return result


def nonlinear_term(problem, coeffs):
    # B on raw coefficient arrays (..., d, N), batched over leading axes
    mask = dealias_mask(problem.N) if problem.spec.dealias else None
    if problem.spec.is_wave:
        result = _wave_term(problem, coeffs, mask)
    else:
        result = _nls_term(problem, coeffs, mask)
    if mask is not None:
        result = result * mask

    if problem.basis is not Basis.EXPONENTIAL:
        if problem.spec.strict_bc:
            leakage = parity_leakage(result, problem.basis)
            if leakage > PARITY_TOLERANCE:
                raise ProblemError(
                    f"Nonlinearity leaves the {problem.basis.value} basis (relative leakage {leakage:.3e})"
                )
        result = restrict_to_basis(result, problem.basis)
    return result


def nonlinearity(problem, state):
    return state.with_coeffs(nonlinear_term(problem, state.coeffs))


# *** Linear flow and initial data ***

def semigroup_blocks(problem, t):
    if t < 0:
        raise ValueError(f"Semigroup time must be non-negative, got {t}")
    return scipy.linalg.expm(t * problem.spectrum.blocks)


def exact_semigroup(problem, state, t):
    return state.with_coeffs(apply_blocks(semigroup_blocks(problem, t), state.coeffs))


def make_state(problem, coeffs):
    return StateVector(coeffs, problem.basis, problem.offset_shifts, problem.offset_rate)


def initial_data(problem, ell, epsilon = 1e-8):
    # Component c is sum_{k=1}^{K-1} c k^{-(o_c + 1/2 + epsilon)} (cos kx + sin kx), o_c its scale offset
    if ell < 0:
        raise ValueError(f"Smoothness must be non-negative, got {ell}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n_grid, basis = problem.N, problem.basis
    k = np.arange(1, problem.K)
    half = np.sqrt(2 * np.pi) / 2
    cos_part = 0.0 if basis is Basis.SINE else half
    sin_part = 0.0 if basis is Basis.COSINE else half / 1j

    coeffs = problem.zero_state_coeffs()
    for component, offset in enumerate(problem.scale_offsets(ell)):
        amplitude = k ** -(offset + 0.5 + epsilon)
        coeffs[component, k] = amplitude * (cos_part + sin_part)
        coeffs[component, n_grid - k] = amplitude * (cos_part - sin_part)

    state = make_state(problem, coeffs)
    return state * (1.0 / scale_norm(state, ell))


def spec_from_config(cfg):
    return ProblemSpec(
        kind = cfg["problem_kind"],
        bc = cfg["problem_bc"],
        potential = cfg["problem_potential"],
        alpha = cfg["problem_alpha"],
        a = cfg["problem_a"],
        b = cfg["problem_b"],
        N = cfg["problem_N"],
        max_degree = cfg["problem_max_degree"],
        strict_bc = cfg["problem_strict_bc"],
        dealias = cfg["problem_dealias"],
    )
