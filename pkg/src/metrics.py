# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Evaluation metrics comparing a real and a generated batch of incidence matrices.

Every statistic is invariant under relabeling nodes and hyperedges, and
batches may have different sizes since all distances act on pooled samples.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel
from scipy.spatial.distance import cdist, pdist
from scipy.stats import wasserstein_distance

from constants import FEATURE_NAMES, MAX_SPECTRAL_K, VERSION
from incidence import IncidenceLike, as_entries, edge_laplacian, node_laplacian
from utils import HedgeError, worker_count

logger = logging.getLogger(__name__)


class EmptyBatchError(HedgeError, ValueError):
    """Raised when a batch is empty or too small for a metric."""


class EmptySampleError(HedgeError, ValueError):
    """Raised when a distance is asked for an empty sample."""


class MetricReport(BaseModel):
    """The ten comparison metrics plus batch metadata."""

    delta_rho: float
    delta_k: float
    delta_e: float
    w1_degree: float
    w1_size: float
    node_spec_wd: float
    edge_spec_wd: float
    tail_gap: float
    intersection_wd: float
    feature_mmd: float
    real_count: int
    gen_count: int
    spectral_k: int
    seed: Optional[int] = None
    config_hash: Optional[str] = None
    version: str = VERSION


@dataclass(frozen=True)
class CalibrationGaps:
    """Signed density/degree/size gaps and pooled degree/size Wasserstein distances."""

    delta_rho: float
    delta_k: float
    delta_e: float
    w1_degree: float
    w1_size: float


def _check_batch(batch: Sequence[IncidenceLike], minimum: int = 1) -> List[np.ndarray]:
    if len(batch) < minimum:
        raise EmptyBatchError(f"batch needs at least {minimum} hypergraphs, got {len(batch)}")
    return [as_entries(h) for h in batch]


def _map(function, items):
    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        return list(executor.map(function, items))


def wasserstein_1d(a: Sequence[float], b: Sequence[float]) -> float:
    """W₁ between two empirical distributions on the line."""
    if len(a) == 0 or len(b) == 0:
        raise EmptySampleError("Wasserstein distance of an empty sample")
    return float(
        wasserstein_distance(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    )


def calibration_gaps(
    real: Sequence[IncidenceLike], gen: Sequence[IncidenceLike]
) -> CalibrationGaps:
    """Gen-minus-real gaps of batch-mean density ρ, node degree k̄ and hyperedge size ē."""
    real, gen = _check_batch(real), _check_batch(gen)

    def means(batch):
        return (
            np.mean([h.mean() for h in batch]),
            np.mean([h.sum(axis=1).mean() for h in batch]),
            np.mean([h.sum(axis=0).mean() for h in batch]),
        )

    def pooled(batch, axis):
        return np.concatenate([h.sum(axis=axis) for h in batch])

    rho_r, k_r, e_r = means(real)
    rho_g, k_g, e_g = means(gen)
    return CalibrationGaps(
        delta_rho=float(rho_g - rho_r),
        delta_k=float(k_g - k_r),
        delta_e=float(e_g - e_r),
        w1_degree=wasserstein_1d(pooled(real, 1), pooled(gen, 1)),
        w1_size=wasserstein_1d(pooled(real, 0), pooled(gen, 0)),
    )


def laplacian_spectra(h: IncidenceLike) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues of L_V and L_E."""
    entries = as_entries(h)
    return (
        scipy.linalg.eigvalsh(node_laplacian(entries).matrix),
        scipy.linalg.eigvalsh(edge_laplacian(entries).matrix),
    )


def default_spectral_k(*batches: Sequence[IncidenceLike]) -> int:
    """K = min(n, m, 32) over every shape in the batches."""
    shapes = [as_entries(h).shape for batch in batches for h in batch]
    return int(min(MAX_SPECTRAL_K, *(min(shape) for shape in shapes)))


def spectral_wd(
    real: Sequence[IncidenceLike], gen: Sequence[IncidenceLike], k: Optional[int] = None
) -> Tuple[float, float]:
    """W₁ between pooled K-smallest spectra of L_V and of L_E."""
    real, gen = _check_batch(real), _check_batch(gen)
    k = default_spectral_k(real, gen) if k is None else k
    if k < 1:
        raise ValueError(f"spectral truncation must be at least 1, got {k}")
    real_spectra, gen_spectra = _map(laplacian_spectra, real), _map(laplacian_spectra, gen)

    def pooled(spectra, side):
        return np.concatenate([pair[side][:k] for pair in spectra])

    return (
        wasserstein_1d(pooled(real_spectra, 0), pooled(gen_spectra, 0)),
        wasserstein_1d(pooled(real_spectra, 1), pooled(gen_spectra, 1)),
    )


def pairwise_intersections(h: IncidenceLike) -> np.ndarray:
    """Multiset {(HᵀH)_jk : j < k} of hyperedge-pair intersection sizes."""
    entries = as_entries(h)
    if entries.shape[1] < 2:
        raise EmptySampleError("intersection statistics need at least two hyperedges")
    overlap = entries.T @ entries
    return np.rint(overlap[np.triu_indices(entries.shape[1], k=1)]).astype(np.int64)


def tail_mass(h: IncidenceLike, threshold: int = 2) -> float:
    """T₂: fraction of hyperedge pairs intersecting in at least `threshold` nodes."""
    return float(np.mean(pairwise_intersections(h) >= threshold))


def intersection_stats(
    real: Sequence[IncidenceLike], gen: Sequence[IncidenceLike]
) -> Tuple[float, float]:
    """(|mean T₂ real − mean T₂ gen|, W₁ between pooled intersection multisets)."""
    real, gen = _check_batch(real), _check_batch(gen)
    real_sets, gen_sets = _map(pairwise_intersections, real), _map(pairwise_intersections, gen)
    tail_real = np.mean([np.mean(s >= 2) for s in real_sets])
    tail_gen = np.mean([np.mean(s >= 2) for s in gen_sets])
    return (
        float(abs(tail_real - tail_gen)),
        wasserstein_1d(np.concatenate(real_sets), np.concatenate(gen_sets)),
    )


def structural_features(h: IncidenceLike) -> np.ndarray:
    """Permutation-invariant 12-dimensional summary φ(H), ordered as FEATURE_NAMES."""
    entries = as_entries(h)
    degrees, sizes = entries.sum(axis=1), entries.sum(axis=0)
    if entries.shape[1] >= 2:
        intersections = pairwise_intersections(entries)
        overlap = (np.mean(intersections >= 2), intersections.mean(), intersections.max())
    else:
        overlap = (0.0, 0.0, 0.0)
    node_spectrum, edge_spectrum = laplacian_spectra(entries)
    values = [
        entries.mean(),
        degrees.mean(),
        degrees.std(),
        sizes.mean(),
        sizes.std(),
        *overlap,
        node_spectrum.mean(),
        edge_spectrum.mean(),
        node_spectrum.max(),
        edge_spectrum.max(),
    ]
    return np.array(values, dtype=np.float64)


def rbf_kernel(x: np.ndarray, y: np.ndarray, bandwidth: float) -> np.ndarray:
    """exp(−‖x − y‖² / (2σ²)) between the rows of x and y."""
    return np.exp(-cdist(x, y, "sqeuclidean") / (2.0 * bandwidth**2))


def unbiased_mmd2(x: np.ndarray, y: np.ndarray, bandwidth: float) -> float:
    """Unbiased MMD² estimate with the RBF kernel."""
    n, m = len(x), len(y)
    k_xx = rbf_kernel(x, x, bandwidth)
    k_yy = rbf_kernel(y, y, bandwidth)
    k_xy = rbf_kernel(x, y, bandwidth)
    term_x = (k_xx.sum() - np.trace(k_xx)) / (n * (n - 1))
    term_y = (k_yy.sum() - np.trace(k_yy)) / (m * (m - 1))
    return float(term_x + term_y - 2.0 * k_xy.mean())


def feature_mmd(real: Sequence[IncidenceLike], gen: Sequence[IncidenceLike]) -> float:
    """√max(0, MMD²) between standardised feature vectors of the two batches.

    Features are standardised with the real batch statistics (a zero standard
    deviation is replaced by 1) and the bandwidth is the median pairwise
    distance of the pooled set, falling back to 1 when that is 0.
    """
    real, gen = _check_batch(real, 2), _check_batch(gen, 2)
    phi_real = np.stack(_map(structural_features, real))
    phi_gen = np.stack(_map(structural_features, gen))
    mean = phi_real.mean(axis=0)
    std = phi_real.std(axis=0)
    std[std == 0] = 1.0
    z_real, z_gen = (phi_real - mean) / std, (phi_gen - mean) / std
    bandwidth = float(np.median(pdist(np.concatenate([z_real, z_gen]))))
    if bandwidth == 0:
        logger.debug("Degenerate MMD bandwidth, falling back to 1")
        bandwidth = 1.0
    return float(np.sqrt(max(0.0, unbiased_mmd2(z_real, z_gen, bandwidth))))


def evaluate(
    real: Sequence[IncidenceLike], gen: Sequence[IncidenceLike], spectral_k: Optional[int] = None
) -> MetricReport:
    """Compute every metric between a real and a generated batch."""
    if spectral_k is None:
        spectral_k = default_spectral_k(_check_batch(real), _check_batch(gen))
    k = spectral_k
    gaps = calibration_gaps(real, gen)
    node_wd, edge_wd = spectral_wd(real, gen, k)
    tail_gap, intersection_wd = intersection_stats(real, gen)
    report = MetricReport(
        **gaps.__dict__,
        node_spec_wd=node_wd,
        edge_spec_wd=edge_wd,
        tail_gap=tail_gap,
        intersection_wd=intersection_wd,
        feature_mmd=feature_mmd(real, gen),
        real_count=len(real),
        gen_count=len(gen),
        spectral_k=k,
    )
    logger.info(f"Evaluated {len(gen)} generated against {len(real)} real hypergraphs")
    return report


def feature_table(batch: Sequence[IncidenceLike]) -> Dict[str, float]:
    """Batch-mean structural features keyed by name."""
    features = np.stack(_map(structural_features, _check_batch(batch)))
    return dict(zip(FEATURE_NAMES, features.mean(axis=0).tolist()))
