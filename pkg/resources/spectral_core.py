'''
----------------------------
Spectral core: transforms, Sobolev and scale norms,
spectral projections, A and |A|^ell
----------------------------
'''

import logging

import numpy as np
import scipy.fft

from models import Basis, SpectralField, wavenumbers
from models.field import domain_factor

logger = logging.getLogger(__name__)

SQRT_2PI = np.sqrt(2 * np.pi)


# *** Transforms ***

def to_grid(coeffs):
    # Coefficients (..., N) to values on x_j = 2 pi j / N
    n_grid = coeffs.shape[-1]
    return scipy.fft.ifft(coeffs, axis = -1) * (n_grid / SQRT_2PI)


def from_grid(samples):
    n_grid = samples.shape[-1]
    return scipy.fft.fft(samples, axis = -1) * (SQRT_2PI / n_grid)


def grid(n_grid, basis = Basis.EXPONENTIAL):
    # Physical collocation points: [0, 2pi) for periodic fields, [0, pi] for sine/cosine
    points = 2 * np.pi * np.arange(n_grid) / n_grid
    if Basis(basis) is Basis.EXPONENTIAL:
        return points
    return points[: n_grid // 2 + 1]


def reflected(coeffs):
    # c_{-k} in FFT order
    return np.roll(coeffs[..., ::-1], 1, axis = -1)


def restrict_to_basis(coeffs, basis):
    # Orthogonal projection onto odd (sine) or even (cosine) extensions
    basis = Basis(basis)
    if basis is Basis.EXPONENTIAL:
        return coeffs
    return 0.5 * (coeffs + basis.parity * reflected(coeffs))


def parity_leakage(coeffs, basis):
    # Relative size of the part of coeffs that does not belong to basis
    kept = restrict_to_basis(coeffs, basis)
    total = np.linalg.norm(coeffs)
    return float(np.linalg.norm(coeffs - kept) / total) if total > 0 else 0.0


def extend_samples(samples, basis):
    # Values on [0, pi] (N/2 + 1 points) to the odd/even extension on [0, 2pi)
    basis = Basis(basis)
    samples = np.asarray(samples)
    if basis is Basis.EXPONENTIAL:
        return samples
    half = samples.shape[-1] - 1
    mirrored = basis.parity * samples[..., half - 1:0:-1]
    return np.concatenate([samples, mirrored], axis = -1)


def field_from_samples(samples, basis = Basis.EXPONENTIAL, real = True):
    basis = Basis(basis)
    full = extend_samples(samples, basis)
    return SpectralField(restrict_to_basis(from_grid(full), basis), basis, real)


def field_to_samples(field):
    values = to_grid(field.coeffs)
    if field.real:
        values = values.real
    if field.basis is not Basis.EXPONENTIAL:
        values = values[: field.N // 2 + 1]
    return values


def derivative_symbol(n_grid):
    # ik with the unpaired Nyquist mode dropped so odd derivatives stay real
    symbol = 1j * wavenumbers(n_grid)
    symbol[n_grid // 2] = 0.0
    return symbol


def dealias_mask(n_grid):
    # 2/3 rule: keep |k| < N/3
    return np.abs(wavenumbers(n_grid)) < n_grid / 3


# *** Norms ***

def sobolev_weights(n_grid, ell):
    k = np.abs(wavenumbers(n_grid))
    weights = np.ones(n_grid)
    nonzero = k > 0
    weights[nonzero] = k[nonzero] ** ell
    return weights


def scale_weights(n_grid, offsets):
    # Per component Sobolev weights, shape (d, N)
    return np.stack([sobolev_weights(n_grid, offset) for offset in offsets])


def weighted_norm(coeffs, weights, factor = 1.0):
    # sqrt(sum |w c|^2) over the trailing (component, mode) axes, batched over the rest
    return factor * np.sqrt(np.sum(np.abs(weights * coeffs) ** 2, axis = (-2, -1)))


def sobolev_norm(field, ell):
    if ell < 0:
        raise ValueError(f"Sobolev index must be non-negative, got {ell}")
    weights = sobolev_weights(field.N, ell)
    return float(domain_factor(field.basis) * np.sqrt(np.sum(np.abs(weights * field.coeffs) ** 2)))


def scale_norm(state, ell):
    if ell < 0:
        raise ValueError(f"Scale index must be non-negative, got {ell}")
    weights = scale_weights(state.N, state.offsets(ell))
    return float(weighted_norm(state.coeffs, weights, state.domain_factor))


# *** Projections and powers of A ***

def projection_mask(moduli, m, part = "P"):
    if m < 0:
        raise ValueError(f"Projection threshold must be non-negative, got {m}")
    if part == "P":
        return moduli <= m
    if part == "Q":
        return moduli > m
    raise ValueError(f"Unknown projection part '{part}', expected 'P' or 'Q'")


def project(state, m, part = "P"):
    mask = projection_mask(state.moduli, m, part)
    return state.with_coeffs(np.where(mask, state.coeffs, 0.0))


def apply_blocks(blocks, coeffs):
    # Mode-wise A_k U_k for coeffs (..., d, N) and blocks (N, d, d)
    return np.einsum("kij,...jk->...ik", blocks, coeffs)


def apply_A(problem, state):
    spectrum = getattr(problem, "spectrum", problem)
    return state.with_coeffs(apply_blocks(spectrum.blocks, state.coeffs))


def apply_abs_A_power(state, ell):
    # |A|^ell on the Q_1 part, identity on the P_1 part (|lambda| <= 1)
    moduli = state.moduli
    factors = np.where(moduli > 1, moduli, 1.0) ** ell
    return state.with_coeffs(state.coeffs * factors)


# *** Products ***

def multiply_on_grid(u_coeffs, v_coeffs, real = True, dealias = False):
    # Pseudospectral product of two coefficient arrays of the same length
    if dealias:
        mask = dealias_mask(u_coeffs.shape[-1])
        u_coeffs, v_coeffs = u_coeffs * mask, v_coeffs * mask
    product = to_grid(u_coeffs) * to_grid(v_coeffs)
    if real:
        product = product.real
    result = from_grid(product)
    if dealias:
        result = result * mask
    return result


def product_basis(u_basis, v_basis):
    u_basis, v_basis = Basis(u_basis), Basis(v_basis)
    if Basis.EXPONENTIAL in (u_basis, v_basis):
        if u_basis is not v_basis:
            raise ValueError(f"Cannot multiply a {u_basis.value} field with a {v_basis.value} field")
        return Basis.EXPONENTIAL
    return Basis.from_parity(u_basis.parity * v_basis.parity)


def pointwise_multiply(u, v, dealias = False):
    if u.N != v.N:
        raise ValueError(f"Fields must share the truncation, got N={u.N} and N={v.N}")
    basis = product_basis(u.basis, v.basis)
    real = u.real and v.real
    coeffs = multiply_on_grid(u.coeffs, v.coeffs, real = real, dealias = dealias)
    return SpectralField(restrict_to_basis(coeffs, basis), basis, real)

