# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.
from typing import Dict, Tuple

import pytest

from config import TrainConfig
from drift_net import DriftNet
from forward import DiffusionConfig
from incidence import IncidenceMatrix
from tests.helpers import random_hypergraph
from trainer import TrainReport, batch_density, train

LEARNING_SEEDS = range(5)
LEARNING_SHAPE = (16, 16)


def fit_single(seed: int) -> Tuple[IncidenceMatrix, DiffusionConfig, DriftNet, TrainReport]:
    """Train the default network for 2000 steps on one seeded 16×16 hypergraph."""
    h = random_hypergraph(seed, *LEARNING_SHAPE, density=0.3)
    diffusion = DiffusionConfig.from_density(h.shape, batch_density([h]))
    net, report = train([h], TrainConfig(seed=seed), diffusion)
    return h, diffusion, net, report


@pytest.fixture(scope="module")
def single_fits() -> Dict[int, Tuple[IncidenceMatrix, DiffusionConfig, DriftNet, TrainReport]]:
    """One trained model per learning seed, shared by the tests of a module."""
    return {seed: fit_single(seed) for seed in LEARNING_SEEDS}
