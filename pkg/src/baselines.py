# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Statistical comparators: independent-Bernoulli (ER-HG) and degree/size-preserving swap MCMC."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from tenacity import RetryError, Retrying, stop_after_attempt

from config import BaselineConfig
from constants import DEFAULT_SWAPS_PER_INCIDENCE, ER_HG_COLUMN_ATTEMPTS
from incidence import IncidenceLike, as_entries
from utils import HedgeError, substream, worker_count

logger = logging.getLogger(__name__)


class InsufficientIncidencesError(HedgeError, ValueError):
    """Raised when a swap chain is asked to run on fewer than two incidences."""


class EmptyColumnError(HedgeError):
    """Raised when a resampled hyperedge column is still empty."""


@dataclass
class BaselineBatch:
    """Generated matrices plus warnings about hyperedges left empty.

    ``sources`` holds, per output, the index of the reference hypergraph it was
    derived from (shape for er_hg, starting matrix for hcm_mcmc).
    """

    entries: List[np.ndarray]
    warnings: List[str] = field(default_factory=list)
    accepted_swaps: List[int] = field(default_factory=list)
    sources: List[int] = field(default_factory=list)


def _reference_entries(reference: Sequence[IncidenceLike]) -> List[np.ndarray]:
    if not reference:
        raise ValueError("reference batch is empty")
    return [as_entries(h) for h in reference]


def er_hg_generate(reference: Sequence[IncidenceLike], count: int, seed: int) -> BaselineBatch:
    """Independent Bernoulli(ρ̂) entries at the reference batch density.

    Output i takes the shape of reference element i mod len(reference). An
    empty column is redrawn up to 100 times, then left empty with a warning.
    """
    entries = _reference_entries(reference)
    rho = float(np.mean([h.mean() for h in entries]))
    batch = BaselineBatch(entries=[])
    for i in range(count):
        rng = substream(seed, "er_hg", i)
        batch.sources.append(i % len(entries))
        n, m = entries[batch.sources[-1]].shape
        matrix = (rng.random((n, m)) < rho).astype(np.uint8)
        for column in np.flatnonzero(matrix.sum(axis=0) == 0):
            try:
                for attempt in Retrying(stop=stop_after_attempt(ER_HG_COLUMN_ATTEMPTS)):
                    with attempt:
                        draw = (rng.random(n) < rho).astype(np.uint8)
                        if not draw.any():
                            raise EmptyColumnError(f"column {column} still empty")
                        matrix[:, column] = draw
            except RetryError:
                batch.warnings.append(f"sample {i}: hyperedge {column} left empty")
        batch.entries.append(matrix)
    if batch.warnings:
        logger.warning(f"ER-HG left {len(batch.warnings)} hyperedges empty at density {rho:.4g}")
    return batch


def propose_swap(matrix: np.ndarray, first: tuple, second: tuple) -> bool:
    """Try the double-incidence swap (v₁,e₁),(v₂,e₂) → (v₁,e₂),(v₂,e₁) in place.

    Proposals that share a node or a hyperedge are no-ops; proposals that
    would duplicate an existing membership are rejected.

    Returns:
        Whether the swap was applied.
    """
    (v1, e1), (v2, e2) = first, second
    if v1 == v2 or e1 == e2 or matrix[v1, e2] or matrix[v2, e1]:
        return False
    matrix[v1, e1] = matrix[v2, e2] = 0
    matrix[v1, e2] = matrix[v2, e1] = 1
    return True


def swap_chain(matrix: np.ndarray, proposals: int, rng: np.random.Generator) -> tuple:
    """Run a degree- and size-preserving swap chain from a copy of `matrix`.

    Returns:
        The final matrix and the number of accepted swaps.
    """
    current = np.array(matrix, dtype=np.uint8)
    rows, cols = np.nonzero(current)
    if rows.size < 2:
        raise InsufficientIncidencesError(f"swap chain needs two incidences, got {rows.size}")
    incidences = np.stack([rows, cols], axis=1)
    accepted = 0
    for _ in range(proposals):
        a, b = rng.choice(len(incidences), size=2, replace=False)
        (v1, e1), (v2, e2) = incidences[a], incidences[b]
        if propose_swap(current, (v1, e1), (v2, e2)):
            incidences[a] = (v1, e2)
            incidences[b] = (v2, e1)
            accepted += 1
    return current, accepted


def hcm_mcmc_generate(
    reference: Sequence[IncidenceLike],
    count: int,
    seed: int,
    cfg: Optional[BaselineConfig] = None,
    swaps_per_incidence: Optional[int] = None,
) -> BaselineBatch:
    """Configuration-style outputs: a random reference copy randomised by incidence swaps.

    Each chain runs swaps_per_incidence × nnz proposals; an explicit
    ``swaps_per_incidence`` (0 included) overrides the config value.
    """
    entries = _reference_entries(reference)
    if swaps_per_incidence is None:
        swaps_per_incidence = (
            cfg.swaps_per_incidence if cfg is not None else DEFAULT_SWAPS_PER_INCIDENCE
        )
    if swaps_per_incidence < 0:
        raise ValueError("swaps_per_incidence must be nonnegative")
    for h in entries:
        if h.sum() < 2:
            raise InsufficientIncidencesError("reference hypergraph has fewer than two incidences")

    def chain(i: int) -> tuple:
        rng = substream(seed, "hcm_mcmc", i)
        index = int(rng.integers(len(entries)))
        source = entries[index]
        return (*swap_chain(source, swaps_per_incidence * int(source.sum()), rng), index)

    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        results = list(executor.map(chain, range(count)))
    batch = BaselineBatch(
        entries=[r[0] for r in results],
        accepted_swaps=[r[1] for r in results],
        sources=[r[2] for r in results],
    )
    logger.info(f"HCM-MCMC generated {count} samples ({swaps_per_incidence} swaps per incidence)")
    return batch


def generate_baseline(reference: Sequence[IncidenceLike], cfg: BaselineConfig) -> BaselineBatch:
    """Dispatch on the configured baseline kind."""
    if cfg.kind == "er_hg":
        return er_hg_generate(reference, cfg.count, cfg.seed)
    return hcm_mcmc_generate(reference, cfg.count, cfg.seed, cfg)
