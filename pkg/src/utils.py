# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""A collection of utility functions that are used across the HEDGE modules."""
import hashlib
import json
import os
from typing import Any, Union

import numpy as np

from constants import THREADS_ENV

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


class HedgeError(Exception):
    """Base class of every error raised by the HEDGE modules."""


def _name_to_int(name: Union[str, int]) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    digest = hashlib.sha256(str(name).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def substream(root_seed: int, *names: Union[str, int]) -> np.random.Generator:
    """Return an independent generator for a named substream of the root seed.

    Every piece of randomness in a run flows from one root seed; named
    substreams keep, e.g., the data split identical across ablation variants.

    Args:
        root_seed: the run's root seed.
        names: path of names (strings or integers) identifying the substream.

    Returns:
        A numpy Generator seeded from ``(root_seed, *names)``.
    """
    entropy = [int(root_seed)] + [_name_to_int(name) for name in names]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Coerce a seed, seed sequence or generator into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def payload_hash(payload: Any) -> str:
    """Return the SHA-256 of the canonical JSON dump of a payload."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def array_checksum(*arrays: np.ndarray) -> str:
    """Return a SHA-256 checksum over the little-endian bytes of the arrays."""
    digest = hashlib.sha256()
    for array in arrays:
        digest.update(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return digest.hexdigest()


def worker_count() -> int:
    """Return the worker pool size, capped by the HEDGE_THREADS environment variable."""
    default = os.cpu_count() or 1
    value = os.environ.get(THREADS_ENV)
    if not value:
        return default
    try:
        return max(1, int(value))
    except ValueError:
        return default


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius inner product of two equally shaped matrices."""
    return float(np.sum(a * b))
