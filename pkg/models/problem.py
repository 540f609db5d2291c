from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from models.field import Basis, frozen_array
from models.spectrum import OperatorSpectrum


class ProblemKind(str, Enum):
    WAVE = "wave"
    WAVE_INHOMOGENEOUS = "wave_inhomogeneous"
    NLS = "nls"


class BoundaryCondition(str, Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @property
    def basis(self):
        return {
            "periodic": Basis.EXPONENTIAL,
            "dirichlet": Basis.SINE,
            "neumann": Basis.COSINE,
        }[self.value]


@dataclass(frozen = True)
class ProblemSpec:
    kind: ProblemKind = ProblemKind.WAVE
    bc: BoundaryCondition = BoundaryCondition.PERIODIC
    # Polynomial coefficients, lowest degree first
    # wave: V'(u) = sum_j c_j u^j; nls: dV/d(conj u) = sum_j c_j |u|^{2j} u
    potential: tuple = (0.0, 1.0, -4.0)
    # Sobolev offset of both NLS components (Y = H_alpha x H_alpha)
    alpha: float = 0.75
    # Cosine-series coefficients of a(x) and b(x), wave_inhomogeneous only
    a: tuple = (1.0,)
    b: tuple = (0.0,)
    # Grid size, K = N / 2 resolved modes
    N: int = 1000
    max_degree: int = 10
    strict_bc: bool = False
    dealias: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))
        object.__setattr__(self, "potential", tuple(float(c) for c in self.potential))
        object.__setattr__(self, "a", tuple(float(c) for c in self.a))
        object.__setattr__(self, "b", tuple(float(c) for c in self.b))

    @property
    def K(self):
        return self.N // 2

    @property
    def basis(self):
        return self.bc.basis

    @property
    def is_wave(self):
        return self.kind is not ProblemKind.NLS


@dataclass(frozen = True, eq = False)
class Problem:
    spec: ProblemSpec
    spectrum: OperatorSpectrum
    offset_shifts: tuple
    offset_rate: float
    # Zero-mode part of the unsplit operator moved into B (P_0 A~ U); empty when A = A~
    folded_zero_mode: bool = False
    # a(x) and b(x) on the collocation grid, wave_inhomogeneous only
    coefficient_samples: dict = field(default_factory = dict)

    @property
    def d(self):
        return self.spectrum.d

    @property
    def N(self):
        return self.spectrum.N

    @property
    def K(self):
        return self.N // 2

    @property
    def basis(self):
        return self.spec.basis

    @property
    def kind(self):
        return self.spec.kind

    def scale_offsets(self, ell):
        return tuple(self.offset_rate * ell + shift for shift in self.offset_shifts)

    def potential_coefficients(self):
        return frozen_array(self.spec.potential, dtype = float)

    def describe(self):
        return f"{self.spec.kind.value}/{self.spec.bc.value} N={self.N}"

    def zero_state_coeffs(self):
        return np.zeros((self.d, self.N), dtype = complex)
