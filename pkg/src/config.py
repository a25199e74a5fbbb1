#!/usr/bin/env python3
# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Structured configuration for HEDGE runs."""
import logging
from pathlib import Path
from typing import List, Optional, Union

import yaml
from pydantic import BaseModel, root_validator, validator

from constants import (
    DEFAULT_CHANNELS,
    DEFAULT_GAMMA,
    DEFAULT_HORIZON,
    DEFAULT_QUAD_POINTS,
    DEFAULT_STEPS,
    DEFAULT_SUBSAMPLE_RETRIES,
    DEFAULT_SWAPS_PER_INCIDENCE,
    DEFAULT_THRESHOLD,
    MIN_QUAD_POINTS,
    REGIME_KINDS,
)
from utils import payload_hash

logger = logging.getLogger(__name__)


class BaseConfigModel(BaseModel):
    """Class to be used for defining the structured configuration options."""

    class Config:
        extra = "forbid"
        validate_assignment = True

    @root_validator(pre=True)
    @classmethod
    def translate_dashes(cls, values: dict) -> dict:
        """Accept `key-name` spellings for `key_name` fields."""
        return {key.replace("-", "_"): value for key, value in values.items()}

    def __getitem__(self, x):
        """Return the item using the notation instance[key]."""
        return getattr(self, x.replace("-", "_"))

    @classmethod
    def keys(cls) -> list[str]:
        """Return config as list items."""
        return list(cls.__fields__.keys())


class DiffusionSettings(BaseConfigModel):
    """Forward-process options; τ defaults to γ·ρ̂(1 − ρ̂) of the training batch."""

    gamma: float = DEFAULT_GAMMA
    tau: Optional[float] = None
    horizon: float = DEFAULT_HORIZON
    schedule_kind: str = "linear"
    quad_points: int = DEFAULT_QUAD_POINTS
    variant: str = "two_sided"
    base_mean: str = "density"

    @validator("gamma", "horizon")
    @classmethod
    def positive_values(cls, value: float) -> float:
        """Check gamma and horizon are positive."""
        if value <= 0:
            raise ValueError("Value must be positive")

        return value

    @validator("tau")
    @classmethod
    def tau_values(cls, value: Optional[float]) -> Optional[float]:
        """Check an explicit tau is positive."""
        if value is not None and value <= 0:
            raise ValueError("Value must be positive")

        return value

    @validator("schedule_kind")
    @classmethod
    def schedule_kind_values(cls, value: str) -> str:
        """Check schedule_kind is one of `linear`, `smoothstep` or `constant`."""
        if value not in ["linear", "smoothstep", "constant"]:
            raise ValueError("Value not one of 'linear', 'smoothstep' or 'constant'")

        return value

    @validator("quad_points")
    @classmethod
    def quad_points_values(cls, value: int) -> int:
        """Check quad_points is between the quadrature floor and 65536."""
        if value < MIN_QUAD_POINTS or value > 65536:
            raise ValueError(f"Value is not between {MIN_QUAD_POINTS} and 65536")

        return value

    @validator("variant")
    @classmethod
    def variant_values(cls, value: str) -> str:
        """Check variant is a known operator variant."""
        if value not in ["two_sided", "node_only", "edge_only", "pure_ou"]:
            raise ValueError("Value not one of 'two_sided', 'node_only', 'edge_only' or 'pure_ou'")

        return value

    @validator("base_mean")
    @classmethod
    def base_mean_values(cls, value: str) -> str:
        """Check base_mean is one of `density` or `zero`."""
        if value not in ["density", "zero"]:
            raise ValueError("Value not one of 'density' or 'zero'")

        return value


class TrainConfig(BaseConfigModel):
    """Drift regression options."""

    steps: int = 2000
    batch: int = 32
    lr: float = 1e-3
    lr_final: float = 1e-5
    s_min: float = 1e-3
    s_max: float = DEFAULT_HORIZON
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_quantile: float = 0.999
    warmup: int = 256
    channels: List[int] = DEFAULT_CHANNELS
    log_every: int = 10

    @validator("steps", "batch", "log_every")
    @classmethod
    def count_values(cls, value: int) -> int:
        """Check counts are at least 1."""
        if value < 1:
            raise ValueError("Value must be at least 1")

        return value

    @validator("warmup")
    @classmethod
    def warmup_values(cls, value: int) -> int:
        """Check warmup is nonnegative."""
        if value < 0:
            raise ValueError("Value must be nonnegative")

        return value

    @validator("lr", "lr_final", "eps")
    @classmethod
    def rate_values(cls, value: float) -> float:
        """Check learning rates and eps are positive."""
        if value <= 0:
            raise ValueError("Value must be positive")

        return value

    @validator("beta1", "beta2", "clip_quantile")
    @classmethod
    def unit_interval_values(cls, value: float) -> float:
        """Check moment decays and the clip quantile are between 0 and 1."""
        if value <= 0 or value > 1:
            raise ValueError("Value is not between 0 and 1")

        return value

    @validator("channels")
    @classmethod
    def channels_values(cls, value: List[int]) -> List[int]:
        """Check the channel widths start and end with 1."""
        if len(value) < 2 or value[0] != 1 or value[-1] != 1 or min(value) < 1:
            raise ValueError("Channel widths must be positive and start and end with 1")

        return value

    @root_validator(skip_on_failure=True)
    @classmethod
    def time_range(cls, values: dict) -> dict:
        """Check 0 < s_min < s_max."""
        if not 0 < values["s_min"] < values["s_max"]:
            raise ValueError("Time range must satisfy 0 < s_min < s_max")

        return values


class SampleConfig(BaseConfigModel):
    """Reverse-time generation options."""

    steps: int = DEFAULT_STEPS
    seed: int = 0
    threshold: float = DEFAULT_THRESHOLD
    count: int = 16

    @validator("steps", "count")
    @classmethod
    def count_values(cls, value: int) -> int:
        """Check the step count and sample count are at least 1."""
        if value < 1:
            raise ValueError("Value must be at least 1")

        return value

    @validator("threshold")
    @classmethod
    def threshold_values(cls, value: float) -> float:
        """Check threshold is between 0 and 1."""
        if value < 0 or value > 1:
            raise ValueError("Value is not between 0 and 1")

        return value


class MetricsConfig(BaseConfigModel):
    """Metric suite options; spectral_k defaults to min(n, m, 32)."""

    spectral_k: Optional[int] = None

    @validator("spectral_k")
    @classmethod
    def spectral_k_values(cls, value: Optional[int]) -> Optional[int]:
        """Check spectral_k is at least 1."""
        if value is not None and value < 1:
            raise ValueError("Value must be at least 1")

        return value


class BaselineConfig(BaseConfigModel):
    """Statistical comparator options."""

    kind: str = "er_hg"
    swaps_per_incidence: int = DEFAULT_SWAPS_PER_INCIDENCE
    seed: int = 0
    count: int = 16

    @validator("kind")
    @classmethod
    def kind_values(cls, value: str) -> str:
        """Check kind is one of `er_hg` or `hcm_mcmc`."""
        if value not in ["er_hg", "hcm_mcmc"]:
            raise ValueError("Value not one of 'er_hg' or 'hcm_mcmc'")

        return value

    @validator("swaps_per_incidence", "count")
    @classmethod
    def count_values(cls, value: int) -> int:
        """Check counts are at least 1."""
        if value < 1:
            raise ValueError("Value must be at least 1")

        return value


class SubsampleConfig(BaseConfigModel):
    """Fixed-size subhypergraph sampling options."""

    n_sub: int = 32
    m_sub: int = 32
    count: int = 64
    seed: int = 0
    max_retries: int = DEFAULT_SUBSAMPLE_RETRIES

    @validator("n_sub", "count", "max_retries")
    @classmethod
    def count_values(cls, value: int) -> int:
        """Check counts are at least 1."""
        if value < 1:
            raise ValueError("Value must be at least 1")

        return value

    @validator("m_sub")
    @classmethod
    def m_sub_values(cls, value: int) -> int:
        """Check m_sub is at least 2."""
        if value < 2:
            raise ValueError("Value must be at least 2")

        return value


class RegimeConfig(BaseConfigModel):
    """Synthetic regime options.

    ``blocks``, ``p_in`` and ``p_out`` drive overlapping_blocks; ``exponent``
    and ``max_size`` drive configuration; ``committee_density`` drives
    committee; ``tail_fraction`` is the planted fraction of edge pairs sharing
    two nodes in sparse_tail_overlap.
    """

    kind: str = "overlapping_blocks"
    n: int = 32
    m: int = 32
    count: int = 16
    seed: int = 0
    blocks: int = 4
    p_in: float = 0.35
    p_out: float = 0.01
    exponent: float = 2.5
    max_size: int = 6
    committee_density: float = 0.3
    tail_fraction: float = 0.02
    swaps_per_incidence: int = DEFAULT_SWAPS_PER_INCIDENCE

    @validator("kind")
    @classmethod
    def kind_values(cls, value: str) -> str:
        """Check kind is a known regime."""
        if value not in REGIME_KINDS:
            raise ValueError(f"Value not one of {', '.join(REGIME_KINDS)}")

        return value

    @validator("n", "m", "count", "blocks", "swaps_per_incidence")
    @classmethod
    def count_values(cls, value: int) -> int:
        """Check shape and counts are at least 1."""
        if value < 1:
            raise ValueError("Value must be at least 1")

        return value

    @validator("max_size")
    @classmethod
    def max_size_values(cls, value: int) -> int:
        """Check max_size is at least 2."""
        if value < 2:
            raise ValueError("Value must be at least 2")

        return value

    @validator("p_in", "p_out", "committee_density", "tail_fraction")
    @classmethod
    def probability_values(cls, value: float) -> float:
        """Check probabilities are between 0 and 1."""
        if value < 0 or value > 1:
            raise ValueError("Value is not between 0 and 1")

        return value

    @validator("exponent")
    @classmethod
    def exponent_values(cls, value: float) -> float:
        """Check the power-law exponent is between 1 and 10."""
        if value <= 1 or value > 10:
            raise ValueError("Value is not between 1 and 10")

        return value


class RunConfig(BaseConfigModel):
    """Complete configuration of a HEDGE run."""

    seed: int = 0
    diffusion: DiffusionSettings = DiffusionSettings()
    train: TrainConfig = TrainConfig()
    sample: SampleConfig = SampleConfig()
    metrics: MetricsConfig = MetricsConfig()
    baseline: BaselineConfig = BaselineConfig()
    regime: RegimeConfig = RegimeConfig()
    subsample: SubsampleConfig = SubsampleConfig()


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Load a YAML run config; a missing path or empty file yields the defaults."""
    if path is None:
        return RunConfig()
    with open(path) as file:
        content = yaml.safe_load(file) or {}
    if not isinstance(content, dict):
        raise ValueError(f"{path} does not hold a mapping of config sections")
    config = RunConfig(**content)
    logger.debug(f"Loaded run config from {path}")
    return config


def config_hash(config: BaseModel) -> str:
    """SHA-256 of the canonical JSON dump of a fully-defaulted config."""
    return payload_hash(config.dict())
