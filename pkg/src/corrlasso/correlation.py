"""Left-correlation matrices and their spectra.

Designs are synthesized as ``A = S @ H`` where ``S`` is the symmetric square
root of the correlation matrix; the theory side only ever sees the
eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SYMMETRY_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-12


@dataclass(frozen=True)
class CorrelationSpectrum:
    eigenvalues: np.ndarray  # ascending, clamped at 0
    sqrt_factor: np.ndarray
    m: int

    @property
    def normalized_trace(self) -> float:
        return float(np.sum(self.eigenvalues) / self.m)


@dataclass(frozen=True)
class CorrelationModel:
    """Which correlation matrix to build.

    ``kind`` is ``"exponential"`` (needs ``rho``), ``"identity"`` or
    ``"explicit"`` (needs ``matrix``).
    """

    kind: str
    m: int
    rho: float = 0.0
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.kind == "exponential":
            if not 0.0 <= self.rho < 1.0:
                raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        elif self.kind == "explicit":
            if self.matrix is None:
                raise ValueError("explicit correlation model needs a matrix")
            mat = np.asarray(self.matrix, dtype=float)
            if mat.shape != (self.m, self.m):
                raise ValueError(f"explicit matrix must be {self.m}x{self.m}, got {mat.shape}")
            _check_symmetric(mat)
        elif self.kind != "identity":
            raise ValueError(f"unknown correlation kind {self.kind!r}")

    def build(self) -> np.ndarray:
        if self.kind == "exponential":
            return build_exponential(self.rho, self.m)
        if self.kind == "identity":
            return np.eye(self.m)
        return np.array(self.matrix, dtype=float)

    def spectrum(self) -> CorrelationSpectrum:
        return spectral_decompose(self.build())


def build_exponential(rho: float, m: int) -> np.ndarray:
    """Correlation matrix with entries ``rho ** ((i - j) ** 2)``.

    The exponent is the squared index distance, not the more common
    ``|i - j|``.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    idx = np.arange(m)
    dist2 = (idx[:, None] - idx[None, :]).astype(float) ** 2
    # numpy gives 0.0 ** 0.0 == 1.0, so rho = 0 yields the identity
    return np.power(float(rho), dist2)


def _check_symmetric(sigma: np.ndarray) -> None:
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"correlation matrix must be square, got shape {sigma.shape}")
    asym = np.max(np.abs(sigma - sigma.T)) if sigma.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"correlation matrix is not symmetric (max asymmetry {asym:.3e})")


def spectral_decompose(sigma) -> CorrelationSpectrum:
    """Eigendecomposition ``sigma = U diag(g) U^T`` and the square root
    ``U diag(sqrt(g)) U^T``.

    Eigenvalues in ``[-1e-12, 0)`` are rounding noise and are clamped to
    zero; anything more negative means the model is not PSD and is rejected.
    """
    sigma = np.asarray(sigma, dtype=float)
    _check_symmetric(sigma)
    sym = 0.5 * (sigma + sigma.T)
    gam, vecs = np.linalg.eigh(sym)
    if gam[0] < -NEGATIVE_EIG_TOL:
        raise ValueError(f"correlation matrix is not positive semidefinite "
                         f"(smallest eigenvalue {gam[0]:.3e})")
    gam = np.clip(gam, 0.0, None)
    root = (vecs * np.sqrt(gam)) @ vecs.T
    root = 0.5 * (root + root.T)
    gam.setflags(write=False)
    root.setflags(write=False)
    return CorrelationSpectrum(eigenvalues=gam, sqrt_factor=root, m=sigma.shape[0])
