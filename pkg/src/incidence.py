# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Hypergraph incidence matrices and the node-side/hyperedge-side operators."""
import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from utils import HedgeError

logger = logging.getLogger(__name__)


class InvalidIncidenceError(HedgeError, ValueError):
    """Raised when a matrix violates the incidence-matrix invariants."""


class DimensionMismatchError(HedgeError, ValueError):
    """Raised when operator and state shapes are not compatible."""


@dataclass(frozen=True)
class IncidenceMatrix:
    """Binary n×m node–hyperedge membership matrix.

    Rows are nodes and columns are hyperedges. Empty hyperedges are always
    rejected; isolated nodes (empty rows) only when ``allow_isolated`` is set.
    """

    entries: np.ndarray
    allow_isolated: bool = field(default=False, compare=False)

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2 or 0 in entries.shape:
            raise InvalidIncidenceError(
                f"incidence matrix must be 2-D and non-empty, got {entries.shape}"
            )
        if not np.all((entries == 0) | (entries == 1)):
            raise InvalidIncidenceError("incidence entries must be 0 or 1")
        entries = entries.astype(np.uint8)
        if np.any(entries.sum(axis=0) == 0):
            raise InvalidIncidenceError("incidence matrix has an empty hyperedge")
        if not self.allow_isolated and np.any(entries.sum(axis=1) == 0):
            raise InvalidIncidenceError("incidence matrix has an isolated node")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        """Node count."""
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        """Hyperedge count."""
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple:
        """(n, m)."""
        return self.entries.shape

    @property
    def nnz(self) -> int:
        """Total incidence count."""
        return int(self.entries.sum())

    def relaxed(self) -> np.ndarray:
        """Return the entries as a float relaxed state."""
        return self.entries.astype(np.float64)

    def permuted(self, row_order: np.ndarray, column_order: np.ndarray) -> "IncidenceMatrix":
        """Return P·H·Qᵀ for the permutations given as index orders."""
        return IncidenceMatrix(self.entries[np.ix_(row_order, column_order)], self.allow_isolated)


IncidenceLike = Union[IncidenceMatrix, np.ndarray]


@dataclass(frozen=True)
class DegreeProfile:
    """Node-degree and hyperedge-size vectors."""

    d_v: np.ndarray
    d_e: np.ndarray

    @property
    def total(self) -> int:
        """Total incidence count."""
        return int(self.d_v.sum())


@dataclass(frozen=True)
class NodeLaplacian:
    """Normalised hypergraph Laplacian L_V (n×n)."""

    matrix: np.ndarray


@dataclass(frozen=True)
class EdgeLaplacian:
    """Normalised hyperedge-overlap Laplacian L_E with its overlap matrix A_E."""

    matrix: np.ndarray
    overlap: np.ndarray
    ov_degrees: np.ndarray


def as_entries(h: IncidenceLike) -> np.ndarray:
    """Return the float entries of an incidence matrix or raw binary array.

    Raw arrays are accepted so generated batches with empty hyperedges can
    still be measured; the zero-inverse convention covers them.
    """
    if isinstance(h, IncidenceMatrix):
        return h.relaxed()
    entries = np.asarray(h, dtype=np.float64)
    if entries.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D incidence array, got shape {entries.shape}")
    return entries


def inverse_power(values: np.ndarray, power: float) -> np.ndarray:
    """Entrywise values**(-power) with zero entries mapped to exactly 0."""
    values = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(values)
    positive = values > 0
    out[positive] = values[positive] ** (-power)
    return out


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose."""
    return 0.5 * (matrix + matrix.T)


def degree_profile(h: IncidenceLike) -> DegreeProfile:
    """Node degrees d_V = H·1 and hyperedge sizes d_E = Hᵀ·1."""
    entries = as_entries(h)
    d_v = entries.sum(axis=1).astype(np.int64)
    d_e = entries.sum(axis=0).astype(np.int64)
    return DegreeProfile(d_v=d_v, d_e=d_e)


def node_laplacian(h: IncidenceLike) -> NodeLaplacian:
    """Compute L_V = I − D_V^{-1/2} H D_E^{-1} Hᵀ D_V^{-1/2}.

    Isolated nodes get a zero smoothing row and column, so L_V carries an
    e_v e_vᵀ block for them.
    """
    entries = as_entries(h)
    profile = degree_profile(entries)
    scaled = entries * inverse_power(profile.d_v, 0.5)[:, None]
    smoothing = (scaled * inverse_power(profile.d_e, 1.0)[None, :]) @ scaled.T
    matrix = symmetrize(np.eye(entries.shape[0]) - smoothing)
    return NodeLaplacian(matrix=matrix)


def edge_laplacian(h: IncidenceLike) -> EdgeLaplacian:
    """Compute the size-normalised overlap matrix A_E and L_E = I − D_ov^{-1/2} A_E D_ov^{-1/2}."""
    entries = as_entries(h)
    profile = degree_profile(entries)
    scaled = entries * inverse_power(profile.d_e, 0.5)[None, :]
    overlap = symmetrize(scaled.T @ scaled)
    np.fill_diagonal(overlap, 0.0)
    ov_degrees = overlap.sum(axis=1)
    inv_sqrt = inverse_power(ov_degrees, 0.5)
    matrix = symmetrize(np.eye(entries.shape[1]) - inv_sqrt[:, None] * overlap * inv_sqrt[None, :])
    return EdgeLaplacian(matrix=matrix, overlap=overlap, ov_degrees=ov_degrees)


def random_incidence(
    rng: np.random.Generator, n: int, m: int, density: float = 0.4
) -> IncidenceMatrix:
    """Bernoulli(density) incidence matrix patched to have no empty row or column."""
    entries = (rng.random((n, m)) < density).astype(np.uint8)
    for column in np.flatnonzero(entries.sum(axis=0) == 0):
        entries[rng.integers(n), column] = 1
    for row in np.flatnonzero(entries.sum(axis=1) == 0):
        entries[row, rng.integers(m)] = 1
    return IncidenceMatrix(entries)


def heat_apply(l_v: NodeLaplacian, l_e: EdgeLaplacian, x: np.ndarray) -> np.ndarray:
    """Apply the two-sided heat operator 𝒜_H(X) = L_V·X + X·L_E."""
    x = np.asarray(x, dtype=np.float64)
    n, m = l_v.matrix.shape[0], l_e.matrix.shape[0]
    if x.shape[-2:] != (n, m):
        raise DimensionMismatchError(f"state shape {x.shape} does not match operators ({n}, {m})")
    return l_v.matrix @ x + x @ l_e.matrix
