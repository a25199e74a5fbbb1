# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

from pathlib import Path
from typing import List, Tuple

import numpy as np
import yaml

from incidence import IncidenceMatrix, random_incidence

DEFAULT_CONFIG = yaml.safe_load(Path("./config.yaml").read_text())

# H = [[1,1],[1,0]]: L_E has eigenvalues {0, 2}.
TWO_BY_TWO = np.array([[1, 1], [1, 0]], dtype=np.uint8)


def random_hypergraph(seed: int, n: int = 4, m: int = 5, density: float = 0.4) -> IncidenceMatrix:
    """Seeded random incidence matrix with no empty rows or columns."""
    return random_incidence(np.random.default_rng(seed), n, m, density)


def random_batch(seed: int, count: int, n: int = 4, m: int = 5) -> List[IncidenceMatrix]:
    """Seeded batch of random incidence matrices of one shape."""
    rng = np.random.default_rng(seed)
    return [random_incidence(rng, n, m) for _ in range(count)]


def random_permutations(seed: int, n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column index orders."""
    rng = np.random.default_rng(seed)
    return rng.permutation(n), rng.permutation(m)


def permutation_matrix(order: np.ndarray) -> np.ndarray:
    """Matrix P with (P·X)[i] = X[order[i]]."""
    return np.eye(len(order))[order]
