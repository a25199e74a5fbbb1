# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Node/hyperedge-permutation-equivariant reverse-drift network with hand-derived gradients.

Every layer mixes channels through the four linear maps that commute with
independent row and column permutations of a matrix (identity, row-mean,
column-mean and global-mean broadcast) plus a constant bias. Hidden layers
are modulated by a time-conditioned per-channel scale and shift and pass
through tanh; the last layer is linear.
"""
import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from constants import (
    CHECKPOINT_MAGIC,
    DEFAULT_CHANNELS,
    DEFAULT_HORIZON,
    TIME_EMBED_DIM,
    TIME_HIDDEN_DIM,
)
from forward import ScheduleRangeError
from incidence import DimensionMismatchError
from utils import HedgeError, SeedLike, array_checksum, as_generator

logger = logging.getLogger(__name__)

ParamGradients = Dict[str, np.ndarray]
BASIS_MAPS = 4


class CheckpointFormatError(HedgeError, ValueError):
    """Raised when a parameter checkpoint cannot be parsed."""


class HorizonMismatchError(HedgeError, ValueError):
    """Raised when a checkpoint was trained for a different diffusion horizon."""


def _row_mean(z: np.ndarray) -> np.ndarray:
    return z.mean(axis=-1, keepdims=True)


def _col_mean(z: np.ndarray) -> np.ndarray:
    return z.mean(axis=-2, keepdims=True)


def _global_mean(z: np.ndarray) -> np.ndarray:
    return z.mean(axis=(-2, -1), keepdims=True)


def _basis_maps(z: np.ndarray) -> List[np.ndarray]:
    """The four equivariant maps, means kept unbroadcast."""
    return [z, _row_mean(z), _col_mean(z), _global_mean(z)]


@dataclass
class _LayerCache:
    maps: List[np.ndarray]
    pre: np.ndarray
    out: np.ndarray


@dataclass
class _ForwardCache:
    squeeze: bool
    embedding: np.ndarray
    time_hidden: np.ndarray
    scales: List[np.ndarray]
    layers: List[_LayerCache]


class DriftNet:
    """State-only reverse-drift field u_s^θ acting on relaxed incidence matrices.

    Args:
        channels: channel widths, first and last must be 1.
        horizon: diffusion horizon S; the time input is s/S.
        seed: initialisation seed.
        zero_final: zero-initialise the final layer so the untrained net outputs 0.
    """

    def __init__(
        self,
        channels: Sequence[int] = tuple(DEFAULT_CHANNELS),
        horizon: float = DEFAULT_HORIZON,
        seed: SeedLike = 0,
        zero_final: bool = True,
    ):
        channels = [int(c) for c in channels]
        if len(channels) < 2 or channels[0] != 1 or channels[-1] != 1:
            raise ValueError(f"channels must start and end with 1, got {channels}")
        self.channels = channels
        self.horizon = float(horizon)
        rng = as_generator(seed)
        params: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for index, (c_in, c_out) in enumerate(zip(channels[:-1], channels[1:])):
            final = index == len(channels) - 2
            std = 0.0 if final and zero_final else 1.0 / np.sqrt(BASIS_MAPS * c_in)
            params[f"layer{index}.weight"] = std * rng.standard_normal((BASIS_MAPS, c_out, c_in))
            params[f"layer{index}.bias"] = (
                np.zeros(c_out) if final and zero_final else 0.1 * rng.standard_normal(c_out)
            )
        film = 2 * sum(self.hidden_channels)
        params["time.w1"] = rng.standard_normal((TIME_EMBED_DIM, TIME_HIDDEN_DIM)) / np.sqrt(
            TIME_EMBED_DIM
        )
        params["time.b1"] = np.zeros(TIME_HIDDEN_DIM)
        params["time.w2"] = 0.1 * rng.standard_normal((TIME_HIDDEN_DIM, film)) / np.sqrt(
            TIME_HIDDEN_DIM
        )
        params["time.b2"] = np.zeros(film)
        self.params = params

    @property
    def num_layers(self) -> int:
        """Number of equivariant layers."""
        return len(self.channels) - 1

    @property
    def hidden_channels(self) -> List[int]:
        """Output widths of the time-modulated hidden layers."""
        return self.channels[1:-1]

    def parameter_count(self) -> int:
        """Total number of scalar parameters."""
        return int(sum(p.size for p in self.params.values()))

    def checksum(self) -> str:
        """SHA-256 over the parameters in declaration order."""
        return array_checksum(*self.params.values())

    def copy(self) -> "DriftNet":
        """Deep copy of the network."""
        clone = DriftNet.__new__(DriftNet)
        clone.channels = list(self.channels)
        clone.horizon = self.horizon
        clone.params = OrderedDict((k, v.copy()) for k, v in self.params.items())
        return clone

    def _time_embedding(self, s: np.ndarray) -> np.ndarray:
        if np.any(s < 0) or np.any(s > self.horizon):
            raise ScheduleRangeError(f"time outside [0, {self.horizon}]")
        frequencies = np.exp(np.linspace(0.0, np.log(100.0), TIME_EMBED_DIM // 2))
        phase = (s / self.horizon)[:, None] * frequencies[None, :]
        return np.concatenate([np.sin(phase), np.cos(phase)], axis=1)

    def _film(self, film: np.ndarray) -> List[np.ndarray]:
        """Split the time head into per-layer (scale, shift) pairs."""
        pieces, offset = [], 0
        for width in self.hidden_channels:
            pieces.append(film[:, offset : offset + 2 * width])
            offset += 2 * width
        return pieces

    def _prepare(self, x: np.ndarray, s) -> tuple:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (2, 3):
            raise DimensionMismatchError(
                f"expected a state or batch of states, got shape {x.shape}"
            )
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        s = np.broadcast_to(np.asarray(s, dtype=np.float64), (x.shape[0],)).copy()
        return x[:, None], s, squeeze

    def forward(self, x: np.ndarray, s, return_cache: bool = False):
        """Evaluate u_s^θ(X) for one state (n, m) or a batch (B, n, m) with scalar or per-sample s."""
        z, s, squeeze = self._prepare(x, s)
        p = self.params
        embedding = self._time_embedding(s)
        time_hidden = np.tanh(embedding @ p["time.w1"] + p["time.b1"])
        film_pieces = self._film(time_hidden @ p["time.w2"] + p["time.b2"])
        layers = []
        for index in range(self.num_layers):
            weight, bias = p[f"layer{index}.weight"], p[f"layer{index}.bias"]
            maps = _basis_maps(z)
            pre = bias[None, :, None, None]
            for k in range(BASIS_MAPS):
                pre = pre + np.einsum("oc,bcnm->bonm", weight[k], maps[k])
            if index < self.num_layers - 1:
                width = weight.shape[1]
                scale = film_pieces[index][:, :width]
                shift = film_pieces[index][:, width:]
                out = np.tanh(pre * (1.0 + scale)[:, :, None, None] + shift[:, :, None, None])
            else:
                out = pre
            layers.append(_LayerCache(maps=maps, pre=pre, out=out))
            z = out
        result = z[:, 0]
        if squeeze:
            result = result[0]
        if return_cache:
            return result, _ForwardCache(squeeze, embedding, time_hidden, film_pieces, layers)
        return result

    __call__ = forward

    def backward(
        self, x: np.ndarray, s, upstream: np.ndarray, cache: Optional[_ForwardCache] = None
    ) -> ParamGradients:
        """Gradients of ⟨upstream, u_s^θ(X)⟩ with respect to every parameter.

        Args:
            x: the forward input.
            s: the forward time(s).
            upstream: cotangent with the shape of the output.
            cache: forward cache of the same call, recomputed when omitted.

        Returns:
            Gradient arrays keyed like ``params``.
        """
        if cache is None:
            _, cache = self.forward(x, s, return_cache=True)
        upstream = np.asarray(upstream, dtype=np.float64)
        if cache.squeeze:
            upstream = upstream[None]
        if upstream.shape != cache.layers[-1].out[:, 0].shape:
            raise DimensionMismatchError(f"upstream shape {upstream.shape} does not match output")
        p = self.params
        grads: ParamGradients = OrderedDict((k, np.zeros_like(v)) for k, v in p.items())
        grad_out = upstream[:, None]
        film_grads: List[np.ndarray] = [None] * len(self.hidden_channels)
        for index in reversed(range(self.num_layers)):
            layer = cache.layers[index]
            weight = p[f"layer{index}.weight"]
            if index < self.num_layers - 1:
                width = weight.shape[1]
                scale = cache.scales[index][:, :width]
                grad_act = grad_out * (1.0 - layer.out**2)
                film_grads[index] = np.concatenate(
                    [np.sum(grad_act * layer.pre, axis=(2, 3)), np.sum(grad_act, axis=(2, 3))],
                    axis=1,
                )
                grad_pre = grad_act * (1.0 + scale)[:, :, None, None]
            else:
                grad_pre = grad_out
            grads[f"layer{index}.bias"] = grad_pre.sum(axis=(0, 2, 3))
            reduced = _basis_maps(grad_pre)
            summed = [
                grad_pre,
                reduced[1] * grad_pre.shape[-1],
                reduced[2] * grad_pre.shape[-2],
                reduced[3] * grad_pre.shape[-2] * grad_pre.shape[-1],
            ]
            grads[f"layer{index}.weight"] = np.stack(
                [np.einsum("bonm,bcnm->oc", summed[k], layer.maps[k]) for k in range(BASIS_MAPS)]
            )
            if index == 0:
                break
            # Each mean-broadcast map is an orthogonal projection, hence self-adjoint.
            grad_out = np.einsum("oc,bonm->bcnm", weight[0], grad_pre)
            for k in range(1, BASIS_MAPS):
                grad_out = grad_out + np.einsum("oc,bonm->bcnm", weight[k], reduced[k])
        if film_grads:
            grad_film = np.concatenate(film_grads, axis=1)
        else:
            grad_film = np.zeros((len(cache.embedding), 0))
        grads["time.w2"] = cache.time_hidden.T @ grad_film
        grads["time.b2"] = grad_film.sum(axis=0)
        grad_hidden = (grad_film @ p["time.w2"].T) * (1.0 - cache.time_hidden**2)
        grads["time.w1"] = cache.embedding.T @ grad_hidden
        grads["time.b1"] = grad_hidden.sum(axis=0)
        return grads


def drift_forward(net: DriftNet, x: np.ndarray, s) -> np.ndarray:
    """Evaluate the drift network."""
    return net.forward(x, s)


def drift_backward(net: DriftNet, x: np.ndarray, s, upstream: np.ndarray) -> ParamGradients:
    """Parameter gradients of ⟨upstream, drift_forward(net, X, s)⟩."""
    return net.backward(x, s, upstream)


def lipschitz_bound(net: DriftNet, s: float) -> float:
    """Upper bound on the Lipschitz constant of X ↦ u_s^θ(X) from layer operator norms.

    The four basis maps are orthogonal projections, so each layer is bounded
    by Σ_k ‖W_k‖₂ times the largest time-modulated gain |1 + scale|.
    """
    _, cache = net.forward(np.zeros((1, 1)), s, return_cache=True)
    bound = 1.0
    for index in range(net.num_layers):
        weight = net.params[f"layer{index}.weight"]
        bound *= sum(np.linalg.norm(weight[k], ord=2) for k in range(BASIS_MAPS))
        if index < net.num_layers - 1:
            width = weight.shape[1]
            bound *= float(np.max(np.abs(1.0 + cache.scales[index][0, :width])))
    return float(bound)


def save_checkpoint(net: DriftNet, path: Union[str, Path]) -> None:
    """Write magic, horizon S as '<f8', tensor count, then per tensor its shape and '<f8' data."""
    with open(path, "wb") as file:
        file.write(CHECKPOINT_MAGIC)
        file.write(struct.pack("<d", net.horizon))
        file.write(struct.pack("<I", len(net.params)))
        for tensor in net.params.values():
            file.write(struct.pack("<I", tensor.ndim))
            file.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            file.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    logger.info(f"Saved drift network checkpoint to {path}")


def load_checkpoint(path: Union[str, Path], horizon: Optional[float] = None) -> DriftNet:
    """Read a checkpoint written by :func:`save_checkpoint`.

    The network keeps the stored horizon. When ``horizon`` is given it must
    match the stored one, since the time input is normalised by S.
    """
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointFormatError(f"{path} is not a drift network checkpoint")
    offset = len(CHECKPOINT_MAGIC)
    tensors = []
    try:
        (stored_horizon,) = struct.unpack_from("<d", data, offset)
        offset += 8
        (count,) = struct.unpack_from("<I", data, offset)
        offset += 4
        for _ in range(count):
            (ndim,) = struct.unpack_from("<I", data, offset)
            offset += 4
            shape = struct.unpack_from(f"<{ndim}I", data, offset)
            offset += 4 * ndim
            size = int(np.prod(shape))
            if offset + 8 * size > len(data):
                raise CheckpointFormatError(f"{path} is truncated")
            tensor = np.frombuffer(data, dtype="<f8", count=size, offset=offset)
            tensors.append(tensor.reshape(shape))
            offset += 8 * size
    except struct.error as e:
        raise CheckpointFormatError(f"{path} has a malformed header: {e}") from e
    if offset != len(data):
        raise CheckpointFormatError(f"{path} has trailing bytes")
    if not np.isfinite(stored_horizon) or stored_horizon <= 0:
        raise CheckpointFormatError(f"{path} stores an invalid horizon {stored_horizon}")
    if horizon is not None and not np.isclose(horizon, stored_horizon, rtol=1e-12, atol=0.0):
        raise HorizonMismatchError(
            f"{path} was trained with horizon {stored_horizon}, requested {horizon}"
        )
    layer_tensors = tensors[:-4]
    if len(tensors) < 6 or len(layer_tensors) % 2:
        raise CheckpointFormatError(f"{path} holds an unexpected tensor count {len(tensors)}")
    try:
        channels = [int(layer_tensors[0].shape[2])] + [int(w.shape[1]) for w in layer_tensors[::2]]
        net = DriftNet(channels=channels, horizon=stored_horizon, seed=0)
    except (IndexError, ValueError) as e:
        raise CheckpointFormatError(f"{path} tensor shapes do not describe a drift network") from e
    if [t.shape for t in tensors] != [p.shape for p in net.params.values()]:
        raise CheckpointFormatError(f"{path} tensor shapes do not describe a drift network")
    for name, tensor in zip(net.params, tensors):
        net.params[name] = tensor.astype(np.float64).copy()
    return net
