# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Incidence files, batch directories, fixed-size subsampling and synthetic regimes."""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from baselines import swap_chain
from config import RegimeConfig, SubsampleConfig
from constants import INCIDENCE_FILE_FORMAT, MANIFEST_FILE, REGIME_ATTEMPTS, VERSION
from incidence import IncidenceLike, IncidenceMatrix, InvalidIncidenceError, as_entries
from metrics import feature_table, tail_mass
from utils import HedgeError, substream

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class IncidenceFormatError(HedgeError, ValueError):
    """Raised when an incidence file is malformed."""


class SubsampleExhaustedError(HedgeError):
    """Raised when no valid subhypergraph was found within the retry budget."""


class InfeasibleRegimeError(HedgeError):
    """Raised when a synthetic regime cannot be realised with the requested parameters."""


class _RejectedDraw(Exception):
    """Raised inside a retry loop when a random draw violates a constraint."""


class BatchManifest(BaseModel):
    """Manifest of a batch directory."""

    kind: str
    seed: int
    count: int
    files: List[str]
    config_hash: Optional[str] = None
    version: str = VERSION
    steps: Optional[int] = None
    saturation: Optional[Dict[str, float]] = None
    threshold_sweep: Dict[str, float] = {}
    failures: List[Dict[str, int]] = []
    empty_hyperedges: Dict[str, int] = {}
    warnings: List[str] = []
    summary: Dict[str, Any] = {}


def save_incidence(h: IncidenceLike, path: PathLike) -> None:
    """Write "n m" and then one "row col" line per incidence in row-major order."""
    entries = as_entries(h)
    rows, cols = np.nonzero(entries)
    lines = [f"{entries.shape[0]} {entries.shape[1]}"] + [f"{r} {c}" for r, c in zip(rows, cols)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_incidence(
    path: PathLike, strict: bool = True, allow_isolated: bool = True
) -> Union[IncidenceMatrix, np.ndarray]:
    """Parse an incidence file.

    Args:
        path: file to read.
        strict: return a validated IncidenceMatrix; otherwise a raw uint8 array,
            which may contain empty hyperedges (generated batches).
        allow_isolated: accept nodes that belong to no hyperedge.
    """
    lines = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise IncidenceFormatError(f"{path} is empty")
    try:
        n, m = (int(token) for token in lines[0].split())
    except ValueError as e:
        raise IncidenceFormatError(f"{path}: malformed header {lines[0]!r}") from e
    if n < 1 or m < 1:
        raise IncidenceFormatError(f"{path}: header dimensions must be positive, got {n} {m}")
    entries = np.zeros((n, m), dtype=np.uint8)
    for number, line in enumerate(lines[1:], start=2):
        try:
            row, col = (int(token) for token in line.split())
        except ValueError as e:
            raise IncidenceFormatError(f"{path}:{number}: malformed line {line!r}") from e
        if not (0 <= row < n and 0 <= col < m):
            raise IncidenceFormatError(f"{path}:{number}: index ({row}, {col}) out of range")
        if entries[row, col]:
            raise IncidenceFormatError(f"{path}:{number}: duplicate incidence ({row}, {col})")
        entries[row, col] = 1
    if not strict:
        return entries
    try:
        return IncidenceMatrix(entries, allow_isolated=allow_isolated)
    except InvalidIncidenceError as e:
        raise IncidenceFormatError(f"{path}: {e}") from e


def summarize_batch(batch: Sequence[IncidenceLike]) -> Dict[str, Any]:
    """Shape, mean size/degree, density, overlap tail mass and mean structural features."""
    entries = [as_entries(h) for h in batch]
    if not entries:
        return {"count": 0}
    summary = {
        "count": len(entries),
        "n": sorted({h.shape[0] for h in entries}),
        "m": sorted({h.shape[1] for h in entries}),
        "mean_size": float(np.mean([h.sum(axis=0).mean() for h in entries])),
        "mean_degree": float(np.mean([h.sum(axis=1).mean() for h in entries])),
        "density": float(np.mean([h.mean() for h in entries])),
    }
    if all(h.shape[1] >= 2 for h in entries):
        summary["tail_mass"] = float(np.mean([tail_mass(h) for h in entries]))
    summary["features"] = feature_table(entries)
    return summary


def write_batch(
    out_dir: PathLike,
    entries: Sequence[Optional[IncidenceLike]],
    kind: str,
    seed: int,
    **manifest_fields,
) -> BatchManifest:
    """Write numbered incidence files (skipping None entries) and the manifest JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    kept = []
    for index, h in enumerate(entries):
        if h is None:
            continue
        name = INCIDENCE_FILE_FORMAT.format(index=index)
        save_incidence(h, out_dir / name)
        files.append(name)
        kept.append(h)
    manifest = BatchManifest(
        kind=kind,
        seed=seed,
        count=len(files),
        files=files,
        summary=summarize_batch(kept),
        **manifest_fields,
    )
    (out_dir / MANIFEST_FILE).write_text(manifest.json(indent=2, sort_keys=True))
    logger.info(f"Wrote {len(files)} incidence files to {out_dir}")
    return manifest


def read_batch(batch_dir: PathLike, strict: bool = False) -> Tuple[List, Optional[BatchManifest]]:
    """Read a batch directory in manifest order, or every numbered file when there is no manifest."""
    batch_dir = Path(batch_dir)
    manifest_path = batch_dir / MANIFEST_FILE
    manifest = None
    if manifest_path.exists():
        manifest = BatchManifest.parse_raw(manifest_path.read_text())
        files = [batch_dir / name for name in manifest.files]
    else:
        files = sorted(batch_dir.glob("*.txt"))
    return [load_incidence(path, strict=strict) for path in files], manifest


def _subsample_once(
    entries: np.ndarray, cfg: SubsampleConfig, rng: np.random.Generator
) -> np.ndarray:
    n, m = entries.shape
    edges = rng.choice(m, size=cfg.m_sub, replace=False)
    incident = np.flatnonzero(entries[:, edges].sum(axis=1) > 0)
    if incident.size >= cfg.n_sub:
        nodes = rng.choice(incident, size=cfg.n_sub, replace=False)
    else:
        others = np.setdiff1d(np.arange(n), incident)
        filler = rng.choice(others, size=cfg.n_sub - incident.size, replace=False)
        nodes = np.concatenate([rng.permutation(incident), filler])
    sub = entries[np.ix_(nodes, edges)]
    if np.any(sub.sum(axis=0) == 0):
        raise _RejectedDraw("subsample has an empty hyperedge")
    return sub


def sample_subhypergraphs(h_full: IncidenceLike, cfg: SubsampleConfig) -> List[IncidenceMatrix]:
    """Draw fixed-size n_sub×m_sub subhypergraphs, hyperedges first and nodes second.

    Nodes are drawn among those incident to the drawn hyperedges. When fewer
    than n_sub nodes are incident, every incident node is kept and the shape is
    completed with uniformly drawn nodes outside the drawn hyperedges. Those
    rows come last and are all-zero, so such samples carry isolated nodes and
    a lower density than a pure incident-node draw would give.
    """
    entries = as_entries(h_full).astype(np.uint8)
    n, m = entries.shape
    if cfg.n_sub > n or cfg.m_sub > m:
        raise ValueError(
            f"target shape ({cfg.n_sub}, {cfg.m_sub}) exceeds hypergraph shape ({n}, {m})"
        )
    samples = []
    for i in range(cfg.count):
        rng = substream(cfg.seed, "subsample", i)
        try:
            for attempt in Retrying(
                stop=stop_after_attempt(cfg.max_retries),
                retry=retry_if_exception_type(_RejectedDraw),
            ):
                with attempt:
                    sub = _subsample_once(entries, cfg, rng)
        except RetryError as e:
            raise SubsampleExhaustedError(
                f"no valid {cfg.n_sub}x{cfg.m_sub} subsample after {cfg.max_retries} retries"
            ) from e
        samples.append(IncidenceMatrix(sub, allow_isolated=True))
    logger.info(f"Sampled {len(samples)} subhypergraphs of shape ({cfg.n_sub}, {cfg.m_sub})")
    return samples


def _power_law(
    rng: np.random.Generator, low: int, high: int, exponent: float, size: int
) -> np.ndarray:
    support = np.arange(low, high + 1)
    weights = support.astype(np.float64) ** (-exponent)
    return rng.choice(support, size=size, p=weights / weights.sum())


def _stub_matching(sizes: np.ndarray, degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sequential stub matching without duplicate memberships, largest hyperedges first."""
    remaining = degrees.astype(np.float64).copy()
    matrix = np.zeros((len(degrees), len(sizes)), dtype=np.uint8)
    for edge in np.argsort(-sizes, kind="stable"):
        available = np.flatnonzero(remaining > 0)
        if available.size < sizes[edge]:
            raise _RejectedDraw("not enough distinct nodes with free stubs")
        weights = remaining[available] / remaining[available].sum()
        members = rng.choice(available, size=sizes[edge], replace=False, p=weights)
        matrix[members, edge] = 1
        remaining[members] -= 1
    return matrix


def _configuration(cfg: RegimeConfig, rng: np.random.Generator) -> np.ndarray:
    max_size = min(cfg.max_size, cfg.n)
    sizes = _power_law(rng, min(2, max_size), max_size, cfg.exponent, cfg.m)
    propensity = np.arange(1, cfg.n + 1, dtype=np.float64) ** (-1.0 / (cfg.exponent - 1.0))
    degrees = rng.multinomial(int(sizes.sum()), propensity / propensity.sum())
    if degrees.max() > cfg.m:
        raise _RejectedDraw("node degree exceeds the hyperedge count")
    matrix = _stub_matching(sizes, degrees, rng)
    if matrix.sum() >= 2:
        matrix, _ = swap_chain(matrix, cfg.swaps_per_incidence * int(matrix.sum()), rng)
    return matrix


def _overlapping_blocks(cfg: RegimeConfig, rng: np.random.Generator) -> np.ndarray:
    node_blocks = rng.integers(cfg.blocks, size=cfg.n)
    edge_blocks = rng.integers(cfg.blocks, size=cfg.m)
    same = node_blocks[:, None] == edge_blocks[None, :]
    matrix = (rng.random((cfg.n, cfg.m)) < np.where(same, cfg.p_in, cfg.p_out)).astype(np.uint8)
    for edge in np.flatnonzero(matrix.sum(axis=0) == 0):
        candidates = np.flatnonzero(node_blocks == edge_blocks[edge])
        if candidates.size == 0:
            candidates = np.arange(cfg.n)
        matrix[rng.choice(candidates), edge] = 1
    return matrix


def _committee(cfg: RegimeConfig, rng: np.random.Generator) -> np.ndarray:
    popularity = rng.gamma(2.0, 1.0, size=cfg.n)
    fractions = cfg.committee_density * rng.uniform(0.25, 1.75, size=cfg.m)
    sizes = np.clip(np.rint(fractions * cfg.n), min(2, cfg.n), cfg.n).astype(int)
    matrix = np.zeros((cfg.n, cfg.m), dtype=np.uint8)
    for edge, size in enumerate(sizes):
        members = rng.choice(cfg.n, size=size, replace=False, p=popularity / popularity.sum())
        matrix[members, edge] = 1
    return matrix


def planting_probability(m: int, tail_fraction: float) -> float:
    """Per-slot planting probability q so that E[T₂] = tail_fraction."""
    slots = m // 2
    if slots == 0:
        return 0.0
    return min(1.0, tail_fraction * (m * (m - 1) / 2) / slots)


def _linear_edge(edges: List[set], candidate: set) -> bool:
    return all(len(edge & candidate) <= 1 for edge in edges)


def _sparse_tail_overlap(cfg: RegimeConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.n < 4:
        raise InfeasibleRegimeError("sparse_tail_overlap needs at least 4 nodes")
    planted = rng.binomial(cfg.m // 2, planting_probability(cfg.m, cfg.tail_fraction))
    edges: List[set] = []

    def place(draw) -> None:
        for attempt in Retrying(
            stop=stop_after_attempt(REGIME_ATTEMPTS), retry=retry_if_exception_type(_RejectedDraw)
        ):
            with attempt:
                group = draw()
                if not all(_linear_edge(edges, edge) for edge in group):
                    raise _RejectedDraw("hyperedge overlaps an existing one in two nodes")
                edges.extend(group)

    def pair():
        a, b, c, d = rng.choice(cfg.n, size=4, replace=False)
        return [{a, b, c}, {a, b, d}]

    def single():
        return [set(rng.choice(cfg.n, size=int(rng.integers(2, 4)), replace=False))]

    try:
        for _ in range(planted):
            place(pair)
        while len(edges) < cfg.m:
            place(single)
    except RetryError as e:
        raise InfeasibleRegimeError(f"could not place {cfg.m} hyperedges on {cfg.n} nodes") from e
    matrix = np.zeros((cfg.n, cfg.m), dtype=np.uint8)
    for column, edge in zip(rng.permutation(cfg.m), edges):
        matrix[list(edge), column] = 1
    return matrix


REGIME_GENERATORS = {
    "configuration": _configuration,
    "overlapping_blocks": _overlapping_blocks,
    "committee": _committee,
    "sparse_tail_overlap": _sparse_tail_overlap,
}


def synth_regime(cfg: RegimeConfig) -> List[IncidenceMatrix]:
    """Generate a batch of one synthetic regime.

    configuration: power-law sizes and node propensities realised by stub
    matching, then swap-randomised. overlapping_blocks: latent node and
    hyperedge blocks with membership probability p_in within and p_out across.
    committee: dense memberships with broad sizes and heterogeneous node
    popularity. sparse_tail_overlap: linear size-2/3 background with planted
    hyperedge pairs sharing exactly two nodes.
    """
    generator = REGIME_GENERATORS[cfg.kind]
    batch = []
    for i in range(cfg.count):
        rng = substream(cfg.seed, "regime", cfg.kind, i)
        try:
            for attempt in Retrying(
                stop=stop_after_attempt(REGIME_ATTEMPTS),
                retry=retry_if_exception_type(_RejectedDraw),
            ):
                with attempt:
                    matrix = generator(cfg, rng)
        except RetryError as e:
            raise InfeasibleRegimeError(
                f"{cfg.kind} regime infeasible after {REGIME_ATTEMPTS} attempts: "
                f"{e.last_attempt.exception()}"
            ) from e
        batch.append(IncidenceMatrix(matrix, allow_isolated=True))
    logger.info(f"Generated {len(batch)} {cfg.kind} hypergraphs of shape ({cfg.n}, {cfg.m})")
    return batch
