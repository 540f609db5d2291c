from dataclasses import dataclass
from functools import cached_property

import numpy as np

from models.field import frozen_array


@dataclass(frozen = True, eq = False)
class OperatorSpectrum:
    # Per mode k (FFT order) the d x d block A_k acting on (u_k, v_k, ...)
    blocks: np.ndarray
    # |lambda_k|, compared against m by P_m / Q_m and used as |A|^ell weight
    moduli: np.ndarray
    # Y-norm weight of each component on mode k, shape (N, d)
    metric: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "blocks", frozen_array(self.blocks))
        object.__setattr__(self, "moduli", frozen_array(self.moduli, dtype = float))
        object.__setattr__(self, "metric", frozen_array(self.metric, dtype = float))
        if self.blocks.ndim != 3 or self.blocks.shape[1] != self.blocks.shape[2]:
            raise ValueError(f"Mode blocks must have shape (N, d, d), got {self.blocks.shape}")
        if self.moduli.shape != self.blocks.shape[:1] or self.metric.shape != self.blocks.shape[:2]:
            raise ValueError("Moduli and metric must match the number of modes and components")

    @property
    def N(self):
        return self.blocks.shape[0]

    @property
    def d(self):
        return self.blocks.shape[1]

    # Blocks written in Y-orthonormal coordinates: D_k A_k D_k^{-1}
    @cached_property
    def normal_blocks(self):
        return self.metric[:, :, None] * self.blocks / self.metric[:, None, :]

    @cached_property
    def eigenvalues(self):
        return np.linalg.eigvals(self.normal_blocks)

    # Growth bound: max real part of the spectrum, exactly 0 for skew spectra
    @cached_property
    def omega(self):
        real_parts = self.eigenvalues.real
        scale = max(1.0, float(np.max(np.abs(self.eigenvalues))))
        omega = float(np.max(real_parts))
        return 0.0 if abs(omega) <= 1e-12 * scale else omega

    def normality_defect(self):
        blocks = self.normal_blocks
        adjoint = np.conj(np.swapaxes(blocks, -1, -2))
        defect = np.abs(blocks @ adjoint - adjoint @ blocks).max(axis = (-2, -1))
        scale = np.maximum(1.0, np.abs(blocks).max(axis = (-2, -1)) ** 2)
        return float(np.max(defect / scale))
