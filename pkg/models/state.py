from dataclasses import dataclass

import numpy as np

from models.field import Basis, SpectralField, domain_factor, frozen_array, wavenumbers


@dataclass(frozen = True, eq = False)
class StateVector:
    # d stacked components, shape (d, N), all in the same basis
    coeffs: np.ndarray
    basis: Basis
    # Sobolev offset of component c in Y_ell is offset_rate * ell + offset_shifts[c]
    # wave: rate 1, shifts (1, 0); nls: rate 2, shifts (alpha, alpha)
    offset_shifts: tuple
    # Also the exponent of the spectral modulus: |lambda_k| = |k| ** offset_rate
    offset_rate: float = 1.0

    def __post_init__(self):
        coeffs = frozen_array(self.coeffs)
        if coeffs.ndim != 2:
            raise ValueError(f"State coefficients must have shape (d, N), got {coeffs.shape}")
        if len(self.offset_shifts) != coeffs.shape[0]:
            raise ValueError(
                f"{len(self.offset_shifts)} scale offsets given for {coeffs.shape[0]} components"
            )
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "offset_shifts", tuple(float(s) for s in self.offset_shifts))

    @property
    def d(self):
        return self.coeffs.shape[0]

    @property
    def N(self):
        return self.coeffs.shape[1]

    @property
    def K(self):
        return self.N // 2

    @property
    def components(self):
        return tuple(SpectralField(row, self.basis) for row in self.coeffs)

    @property
    def moduli(self):
        return np.abs(wavenumbers(self.N)) ** self.offset_rate

    @property
    def domain_factor(self):
        return domain_factor(self.basis)

    def offsets(self, ell):
        return tuple(self.offset_rate * ell + shift for shift in self.offset_shifts)

    def with_coeffs(self, coeffs):
        return StateVector(coeffs, self.basis, self.offset_shifts, self.offset_rate)

    def zeros_like(self):
        return self.with_coeffs(np.zeros_like(self.coeffs))

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    @classmethod
    def from_components(cls, components, offset_shifts, offset_rate = 1.0):
        bases = {component.basis for component in components}
        sizes = {component.N for component in components}
        if len(bases) != 1 or len(sizes) != 1:
            raise ValueError("All components of a state must share basis and truncation")
        return cls(
            np.stack([component.coeffs for component in components]),
            bases.pop(),
            offset_shifts,
            offset_rate,
        )
