# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Eigendecomposition of the operator pair and per-mode heat-flow machinery."""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from constants import SPECTRAL_GAP_TOLERANCE, ZERO_EIGENVALUE_TOLERANCE
from incidence import DimensionMismatchError, EdgeLaplacian, NodeLaplacian
from utils import HedgeError

logger = logging.getLogger(__name__)


class EigensolverError(HedgeError):
    """Raised when the symmetric eigensolver fails to converge."""


class NegativeTimeError(HedgeError, ValueError):
    """Raised when a heat-flow time is negative."""


@dataclass(frozen=True)
class ModeGrid:
    """Joint node–hyperedge mode rates λ_i + μ_j."""

    rates: np.ndarray

    @property
    def spectral_gap(self) -> Optional[float]:
        """Smallest strictly positive mode rate, or None when every mode is a zero mode."""
        positive = self.rates[self.rates > SPECTRAL_GAP_TOLERANCE]
        if positive.size == 0:
            return None
        return float(positive.min())


@dataclass(frozen=True)
class SpectralBasis:
    """Orthonormal eigenbases of L_V (U, lam) and L_E (V, mu)."""

    u: np.ndarray
    lam: np.ndarray
    v: np.ndarray
    mu: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        """(n, m)."""
        return self.u.shape[0], self.v.shape[0]

    def mode_grid(self) -> ModeGrid:
        """Return the grid of joint mode rates."""
        return ModeGrid(rates=self.lam[:, None] + self.mu[None, :])

    def zero_mode_projectors(self) -> Tuple[np.ndarray, np.ndarray]:
        """Orthogonal projectors Π_V and Π_E onto the kernels of L_V and L_E."""
        u0 = self.u[:, self.lam <= ZERO_EIGENVALUE_TOLERANCE]
        v0 = self.v[:, self.mu <= ZERO_EIGENVALUE_TOLERANCE]
        return u0 @ u0.T, v0 @ v0.T


def _symmetric_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with clamped eigenvalues and a deterministic sign per column."""
    size = matrix.shape[0]
    if not np.any(matrix):
        return np.zeros(size), np.eye(size)
    try:
        # dsyev: tridiagonalisation followed by implicit QL/QR.
        values, vectors = scipy.linalg.eigh(matrix, driver="ev")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverError(f"symmetric eigensolver did not converge: {e}") from e
    values = np.clip(values, 0.0, None)
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(size)])
    signs[signs == 0] = 1.0
    return values, vectors * signs[None, :]


def eigendecompose(l_v: NodeLaplacian, l_e: EdgeLaplacian) -> SpectralBasis:
    """Eigendecompose the node and edge Laplacians into a SpectralBasis."""
    lam, u = _symmetric_eigh(l_v.matrix)
    mu, v = _symmetric_eigh(l_e.matrix)
    logger.debug("Eigendecomposed operators of shape (%d, %d)", u.shape[0], v.shape[0])
    return SpectralBasis(u=u, lam=lam, v=v, mu=mu)


def _check_shape(basis: SpectralBasis, x: np.ndarray) -> None:
    if x.shape[-2:] != basis.shape:
        raise DimensionMismatchError(f"state shape {x.shape} does not match basis {basis.shape}")


def to_modes(basis: SpectralBasis, x: np.ndarray) -> np.ndarray:
    """Transform a state into the Kronecker mode basis, X̃ = Uᵀ X V."""
    x = np.asarray(x, dtype=np.float64)
    _check_shape(basis, x)
    return basis.u.T @ x @ basis.v


def from_modes(basis: SpectralBasis, x_modes: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_modes`, X = U X̃ Vᵀ."""
    x_modes = np.asarray(x_modes, dtype=np.float64)
    _check_shape(basis, x_modes)
    return basis.u @ x_modes @ basis.v.T


def apply_operator(basis: SpectralBasis, x: np.ndarray) -> np.ndarray:
    """Apply the heat operator through its spectral form, U((λ_i+μ_j)⊙X̃)Vᵀ."""
    return from_modes(basis, basis.mode_grid().rates * to_modes(basis, x))


def heat_kernel_state(basis: SpectralBasis, x0: np.ndarray, s: float) -> np.ndarray:
    """Closed-form pure-heat solution e^{−sL_V}·X₀·e^{−sL_E} via per-mode decay."""
    if s < 0:
        raise NegativeTimeError(f"heat-flow time must be nonnegative, got {s}")
    decay = np.exp(-s * basis.mode_grid().rates)
    return from_modes(basis, decay * to_modes(basis, x0))
