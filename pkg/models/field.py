from dataclasses import dataclass
from enum import Enum

import numpy as np


class Basis(str, Enum):
    # e^{ikx} on [0, 2pi]
    EXPONENTIAL = "exponential"
    # sin(kx) on [0, pi], stored as the odd extension to [0, 2pi]
    SINE = "sine"
    # cos(kx) on [0, pi], stored as the even extension to [0, 2pi]
    COSINE = "cosine"

    @property
    def parity(self):
        return {"exponential": 0, "sine": -1, "cosine": 1}[self.value]

    @classmethod
    def from_parity(cls, parity):
        return {0: cls.EXPONENTIAL, -1: cls.SINE, 1: cls.COSINE}[parity]


def frozen_array(values, dtype = complex):
    array = np.array(values, dtype = dtype)
    array.setflags(write = False)
    return array


def wavenumbers(n_grid):
    # Integer modes in FFT order: 0, 1, ..., N/2 - 1, -N/2, ..., -1
    return np.fft.fftfreq(n_grid, d = 1.0 / n_grid)


def domain_factor(basis):
    # Sine/cosine fields live on [0, pi]; their extension doubles the L2 mass
    return 1.0 if basis is Basis.EXPONENTIAL else np.sqrt(0.5)


@dataclass(frozen = True, eq = False)
class SpectralField:
    # Coefficients u_k of u(x) = (2pi)^{-1/2} sum_k u_k e^{ikx}, FFT order, length N
    coeffs: np.ndarray
    basis: Basis = Basis.EXPONENTIAL
    # Physical values are real, so u_{-k} = conj(u_k)
    real: bool = True

    def __post_init__(self):
        coeffs = frozen_array(self.coeffs)
        if coeffs.ndim != 1 or coeffs.size % 2:
            raise ValueError(f"Field coefficients must be a 1-D array of even length, got shape {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "basis", Basis(self.basis))

    # Grid size
    @property
    def N(self):
        return self.coeffs.size

    # Truncation: modes |k| <= K are resolved
    @property
    def K(self):
        return self.coeffs.size // 2

    @property
    def wavenumbers(self):
        return wavenumbers(self.N)

    def with_coeffs(self, coeffs):
        return SpectralField(coeffs, self.basis, self.real)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__
