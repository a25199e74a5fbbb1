# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Reverse-drift regression against exact conditional targets."""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from config import TrainConfig
from constants import VERSION
from drift_net import DriftNet, ParamGradients
from forward import DiffusionConfig, ForwardProcess
from incidence import IncidenceLike, IncidenceMatrix
from utils import HedgeError, substream, worker_count

logger = logging.getLogger(__name__)


class NonFiniteTargetError(HedgeError, ValueError):
    """Raised when a regression target is NaN or infinite."""


class DatasetShapeError(HedgeError, ValueError):
    """Raised when a training dataset is empty or mixes incidence shapes."""


class TrainReport(BaseModel):
    """Loss curve and provenance of a training run."""

    losses: List[Tuple[int, float]]
    zero_predictor_loss: float
    params_checksum: str
    steps: int
    wall_ms: float
    seed: int
    config_hash: Optional[str] = None
    version: str = VERSION


@dataclass
class TrainingBatch:
    """Minibatch of (hypergraph index, time, forward state, conditional target)."""

    indices: np.ndarray
    times: np.ndarray
    states: np.ndarray
    targets: np.ndarray


class Adam:
    """Adaptive-moment optimiser updating a parameter dict in place."""

    def __init__(
        self,
        params: Dict[str, np.ndarray],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.first = {k: np.zeros_like(v) for k, v in params.items()}
        self.second = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: Dict[str, np.ndarray], grads: ParamGradients, lr: float) -> None:
        """Apply one bias-corrected update."""
        self.t += 1
        for name in params:
            grad = grads[name]
            self.first[name] = self.beta1 * self.first[name] + (1.0 - self.beta1) * grad
            self.second[name] = self.beta2 * self.second[name] + (1.0 - self.beta2) * grad**2
            first = self.first[name] / (1.0 - self.beta1**self.t)
            second = self.second[name] / (1.0 - self.beta2**self.t)
            params[name] = params[name] - lr * first / (np.sqrt(second) + self.eps)


def cosine_lr(step: int, total: int, lr: float, lr_final: float) -> float:
    """Cosine decay from lr at step 0 to lr_final at the last step."""
    if total <= 1:
        return lr
    progress = min(step / (total - 1), 1.0)
    return lr_final + 0.5 * (lr - lr_final) * (1.0 + np.cos(np.pi * progress))


class TargetClipper:
    """Per-sample target-norm clipping at a quantile of a warmup buffer of norms."""

    def __init__(self, quantile: float, warmup: int):
        self.quantile = quantile
        self.warmup = warmup
        self.buffer: List[float] = []
        self.threshold: Optional[float] = None

    def __call__(self, targets: np.ndarray) -> np.ndarray:
        """Clip a batch of targets (B, n, m)."""
        norms = np.sqrt(np.sum(targets**2, axis=(1, 2)))
        if self.threshold is None:
            if self.warmup == 0:
                return targets
            self.buffer.extend(norms.tolist())
            if len(self.buffer) < self.warmup:
                return targets
            self.threshold = float(np.quantile(self.buffer, self.quantile))
            logger.debug(f"Target clipping threshold fixed at {self.threshold:.4g}")
        factors = np.minimum(1.0, self.threshold / np.maximum(norms, 1e-300))
        return targets * factors[:, None, None]


def check_dataset(data: Sequence[IncidenceLike]) -> List[IncidenceMatrix]:
    """Validate a training dataset: nonempty, valid incidence matrices of one shape."""
    if not data:
        raise DatasetShapeError("training dataset is empty")
    matrices = [
        h if isinstance(h, IncidenceMatrix) else IncidenceMatrix(h, allow_isolated=True)
        for h in data
    ]
    shapes = {h.shape for h in matrices}
    if len(shapes) != 1:
        raise DatasetShapeError(f"training dataset mixes shapes {sorted(shapes)}")
    return matrices


def batch_density(data: Sequence[IncidenceLike]) -> float:
    """Mean entry density ρ̂ of a batch."""
    return float(
        np.mean([np.mean(h.entries if isinstance(h, IncidenceMatrix) else h) for h in data])
    )


def build_basis_bank(
    cfg: DiffusionConfig, data: Sequence[IncidenceMatrix]
) -> List[ForwardProcess]:
    """Eigendecompose every training hypergraph once, in parallel."""
    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        return list(executor.map(lambda h: ForwardProcess(cfg, h), data))


def sample_training_batch(
    bank: Sequence[ForwardProcess], cfg: TrainConfig, rng: np.random.Generator, size: int
) -> TrainingBatch:
    """Draw H uniformly, s ∼ Uniform[s_min, s_max], X_s from the conditional law and its target."""
    indices = rng.integers(len(bank), size=size)
    times = rng.uniform(cfg.s_min, cfg.s_max, size=size)
    seeds = rng.integers(2**62, size=size)

    def draw(k: int) -> Tuple[np.ndarray, np.ndarray]:
        process = bank[indices[k]]
        state = process.sample(times[k], seeds[k])
        return state, process.reverse_drift(state, times[k])

    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        pairs = list(executor.map(draw, range(size)))
    return TrainingBatch(
        indices=indices,
        times=times,
        states=np.stack([p[0] for p in pairs]),
        targets=np.stack([p[1] for p in pairs]),
    )


def _check_targets(batch: TrainingBatch) -> None:
    if not np.all(np.isfinite(batch.targets)):
        raise NonFiniteTargetError(
            "non-finite regression target; a time below s_min leaked through"
        )


def regression_loss(net: DriftNet, batch: TrainingBatch) -> float:
    """Mean over the batch of ‖u_s^θ(X_s) − u*_{s|H}(X_s)‖_F²."""
    _check_targets(batch)
    residual = net.forward(batch.states, batch.times) - batch.targets
    return float(np.mean(np.sum(residual**2, axis=(1, 2))))


def loss_and_gradients(net: DriftNet, batch: TrainingBatch) -> Tuple[float, ParamGradients]:
    """Regression loss together with its parameter gradients."""
    _check_targets(batch)
    output, cache = net.forward(batch.states, batch.times, return_cache=True)
    residual = output - batch.targets
    loss = float(np.mean(np.sum(residual**2, axis=(1, 2))))
    grads = net.backward(batch.states, batch.times, 2.0 * residual / len(residual), cache=cache)
    return loss, grads


def train_step(net: DriftNet, optimizer: Adam, batch: TrainingBatch, lr: float) -> float:
    """One optimiser step on a batch; returns the pre-update loss."""
    loss, grads = loss_and_gradients(net, batch)
    optimizer.step(net.params, grads, lr)
    return loss


def train(
    data: Sequence[IncidenceLike],
    cfg: TrainConfig,
    diffusion: Optional[DiffusionConfig] = None,
    log_path: Optional[Union[str, Path]] = None,
    on_step: Optional[Callable[[int, DriftNet], None]] = None,
) -> Tuple[DriftNet, TrainReport]:
    """Fit the drift network by regression on exact conditional reverse-drift targets.

    Args:
        data: training hypergraphs, all of one shape.
        cfg: training options.
        diffusion: forward-process configuration; matched to the batch density when omitted.
        log_path: optional line-delimited JSON log {step, loss, lr, wall_ms}.
        on_step: optional callback invoked after every update.

    Returns:
        The trained network and its report.
    """
    matrices = check_dataset(data)
    if diffusion is None:
        diffusion = DiffusionConfig.from_density(matrices[0].shape, batch_density(matrices))
    if cfg.s_max > diffusion.horizon:
        raise ValueError(f"s_max {cfg.s_max} exceeds the diffusion horizon {diffusion.horizon}")
    bank = build_basis_bank(diffusion, matrices)
    net = DriftNet(
        channels=cfg.channels, horizon=diffusion.horizon, seed=substream(cfg.seed, "init")
    )
    optimizer = Adam(net.params, cfg.beta1, cfg.beta2, cfg.eps)
    clipper = TargetClipper(cfg.clip_quantile, cfg.warmup)
    rng = substream(cfg.seed, "train")
    logger.info(
        f"Training on {len(matrices)} hypergraphs of shape {matrices[0].shape} "
        f"for {cfg.steps} steps ({net.parameter_count()} parameters)"
    )
    losses: List[Tuple[int, float]] = []
    zero_loss = None
    start = time.monotonic()
    log_file = open(log_path, "w") if log_path is not None else None
    try:
        for step in range(cfg.steps):
            batch = sample_training_batch(bank, cfg, rng, cfg.batch)
            batch.targets = clipper(batch.targets)
            if zero_loss is None:
                zero_loss = float(np.mean(np.sum(batch.targets**2, axis=(1, 2))))
            lr = cosine_lr(step, cfg.steps, cfg.lr, cfg.lr_final)
            loss = train_step(net, optimizer, batch, lr)
            losses.append((step, loss))
            if on_step is not None:
                on_step(step, net)
            if step % cfg.log_every == 0 or step == cfg.steps - 1:
                wall_ms = 1000.0 * (time.monotonic() - start)
                logger.debug(f"step {step}: loss {loss:.6g}, lr {lr:.3g}")
                if log_file is not None:
                    record = {"step": step, "loss": loss, "lr": lr, "wall_ms": wall_ms}
                    log_file.write(json.dumps(record) + "\n")
    finally:
        if log_file is not None:
            log_file.close()
    report = TrainReport(
        losses=losses,
        zero_predictor_loss=zero_loss,
        params_checksum=net.checksum(),
        steps=cfg.steps,
        wall_ms=1000.0 * (time.monotonic() - start),
        seed=cfg.seed,
    )
    logger.info(
        f"Training finished: final loss {losses[-1][1]:.6g} (zero predictor {zero_loss:.6g})"
    )
    return net, report
