# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Reverse-time generation: Gaussian base draw, Euler–Maruyama integration, binary projection."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import SampleConfig
from constants import DEFAULT_THRESHOLD, SATURATION_MARGIN
from drift_net import DriftNet
from forward import DiffusionConfig
from incidence import DimensionMismatchError
from utils import SeedLike, worker_count

logger = logging.getLogger(__name__)

Drift = Callable[[np.ndarray, float], np.ndarray]
CHUNK_SIZE = 32


@dataclass(frozen=True)
class SampleFailure:
    """A sample whose state became non-finite, with the reverse step it happened at."""

    sample: int
    step: int


@dataclass(frozen=True)
class Projection:
    """Binary projection of a relaxed state and its saturation diagnostic."""

    entries: np.ndarray
    saturation: float


@dataclass
class GeneratedBatch:
    """Projected samples (None for failed ones) with their relaxed terminal states."""

    entries: List[Optional[np.ndarray]]
    relaxed: List[Optional[np.ndarray]]
    saturation: List[float] = field(default_factory=list)
    failures: List[SampleFailure] = field(default_factory=list)
    empty_hyperedges: Dict[int, int] = field(default_factory=dict)

    @property
    def succeeded(self) -> List[np.ndarray]:
        """Projected samples that finished without a failure."""
        return [e for e in self.entries if e is not None]


def brownian_increment(seed: int, sample: int, step: int, shape: Tuple[int, ...]) -> np.ndarray:
    """Standard normal increment for (sample, step) from a counter-based generator.

    The Philox key is (seed, sample) and the counter starts at step, so any
    single step of any sample can be regenerated independently.
    """
    bit_generator = np.random.Philox(key=[seed % 2**64, sample], counter=[0, 0, step, 0])
    return np.random.Generator(bit_generator).standard_normal(shape)


def init_base(
    cfg: DiffusionConfig, shape: Optional[Tuple[int, ...]] = None, seed: SeedLike = None
) -> np.ndarray:
    """Draw entrywise i.i.d. from the base law N(M₀, (τ/γ)·I).

    Args:
        cfg: forward-process configuration.
        shape: (n, m) or (count, n, m); defaults to the shape of M₀.
        seed: seed of the draw.
    """
    shape = tuple(shape) if shape is not None else cfg.shape
    if shape[-2:] != cfg.shape:
        raise DimensionMismatchError(
            f"requested shape {shape} does not match base mean {cfg.shape}"
        )
    noise = np.random.default_rng(seed).standard_normal(shape)
    return cfg.m0 + np.sqrt(cfg.stationary_variance) * noise


def reverse_integrate(
    drift: Drift,
    cfg: DiffusionConfig,
    states: np.ndarray,
    steps: int,
    seed: int = 0,
    sample_ids: Optional[Sequence[int]] = None,
    s_stop: float = 0.0,
    increments: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, Dict[int, int]]:
    """Euler–Maruyama integration of the reverse SDE from s = S down to s_stop.

    Y ← Y + Δt·u(Y, S − t_k) + √(2τβ(S − t_k)Δt)·ε_k on the uniform grid
    t_k = k·(S − s_stop)/K.

    Args:
        drift: batched reverse drift (B, n, m), s -> (B, n, m).
        cfg: forward-process configuration.
        states: initial states (B, n, m); not modified.
        steps: number of steps K.
        seed: root seed of the per-(sample, step) increments.
        sample_ids: sample indices keying the increments; defaults to 0..B-1.
        s_stop: time at which the integration stops.
        increments: explicit standard normal increments (K, B, n, m), overriding the generator.
        rng: draw increments from this generator instead of the per-(sample, step) streams.

    Returns:
        The terminal states and a map from failed sample id to the step its state went non-finite.
    """
    if steps < 1:
        raise ValueError("at least one reverse step is required")
    states = np.array(states, dtype=np.float64)
    sample_ids = np.arange(len(states)) if sample_ids is None else np.asarray(sample_ids)
    dt = (cfg.horizon - s_stop) / steps
    active = np.ones(len(states), dtype=bool)
    failures: Dict[int, int] = {}
    for k in range(steps):
        index = np.flatnonzero(active)
        if index.size == 0:
            break
        s = cfg.horizon - k * dt
        if increments is not None:
            noise = increments[k][index]
        elif rng is not None:
            noise = rng.standard_normal((index.size,) + cfg.shape)
        else:
            noise = np.stack(
                [brownian_increment(seed, int(sample_ids[i]), k, cfg.shape) for i in index]
            )
        scale = np.sqrt(2.0 * cfg.tau * float(cfg.beta(s)) * dt)
        with np.errstate(over="ignore", invalid="ignore"):
            states[index] = states[index] + dt * drift(states[index], s) + scale * noise
        finite = np.all(np.isfinite(states[index]), axis=(1, 2))
        for i in index[~finite]:
            failures[int(sample_ids[i])] = k
            active[i] = False
            logger.warning(f"Sample {int(sample_ids[i])} became non-finite at reverse step {k}")
    return states, failures


def project_binary(y: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> Projection:
    """Entrywise indicator 1{Y ≥ threshold} plus the fraction of entries within 0.1 of {0, 1}."""
    y = np.asarray(y, dtype=np.float64)
    near = (np.abs(y) <= SATURATION_MARGIN) | (np.abs(y - 1.0) <= SATURATION_MARGIN)
    return Projection(entries=(y >= threshold).astype(np.uint8), saturation=float(np.mean(near)))


def threshold_sweep(y: np.ndarray, thresholds: Sequence[float]) -> Dict[float, float]:
    """Fraction of projected entries that change relative to the 0.5 threshold, per threshold."""
    reference = project_binary(y, DEFAULT_THRESHOLD).entries
    return {
        float(t): float(np.mean(project_binary(y, t).entries != reference)) for t in thresholds
    }


def generate(
    net: DriftNet,
    cfg: DiffusionConfig,
    sc: SampleConfig,
    count: Optional[int] = None,
    drift: Optional[Drift] = None,
) -> GeneratedBatch:
    """Generate incidence matrices by reverse-time integration from the base law.

    Samples are independent; chunks of samples run on a thread pool and the
    output order follows the sample index. Generated hyperedges that end up
    empty are counted, not repaired, so the entries are raw binary arrays.
    """
    count = sc.count if count is None else count
    drift = drift if drift is not None else net.forward
    initial = np.stack(
        [init_base(cfg, seed=np.random.SeedSequence([sc.seed, i])) for i in range(count)]
    )
    chunks = [
        list(range(start, min(start + CHUNK_SIZE, count)))
        for start in range(0, count, CHUNK_SIZE)
    ]

    def run(ids: List[int]) -> Tuple[np.ndarray, Dict[int, int]]:
        return reverse_integrate(drift, cfg, initial[ids], sc.steps, sc.seed, ids)

    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        results = list(executor.map(run, chunks))
    batch = GeneratedBatch(entries=[], relaxed=[])
    for ids, (states, failures) in zip(chunks, results):
        for i, state in zip(ids, states):
            if i in failures:
                batch.failures.append(SampleFailure(sample=i, step=failures[i]))
                batch.entries.append(None)
                batch.relaxed.append(None)
                continue
            projection = project_binary(state, sc.threshold)
            batch.entries.append(projection.entries)
            batch.relaxed.append(state)
            batch.saturation.append(projection.saturation)
            empty = int(np.sum(projection.entries.sum(axis=0) == 0))
            if empty:
                batch.empty_hyperedges[i] = empty
    if batch.empty_hyperedges:
        logger.warning(f"{len(batch.empty_hyperedges)} generated samples have empty hyperedges")
    logger.info(
        f"Generated {len(batch.succeeded)}/{count} samples ({len(batch.failures)} failures)"
    )
    return batch
