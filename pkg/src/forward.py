# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Heat–OU forward process: schedules, exact conditional moments, scores and drift targets.

Conditional on a hypergraph H the forward SDE

    dX = −α(s)𝒜_H(X) ds − β(s)γ(X − M₀) ds + √(2τβ(s)) dW,  X₀ = H

is linear-Gaussian and decouples into nm scalar ODEs in the Kronecker basis
of the two Laplacians. Per mode (i, j) with rate r = λ_i + μ_j the
integrating factor is B(s) = r·∫α + γ·∫β, so

    m̃(s) = e^{−B(s)}·H̃ + M̃₀·γ∫₀ˢ β(u)e^{−(B(s)−B(u))}du
    c(s)  = 2τ∫₀ˢ β(u)e^{−2(B(s)−B(u))}du

Only differences B(s) − B(u) ≥ 0 are ever exponentiated.
"""
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from constants import (
    DEFAULT_GAMMA,
    DEFAULT_HORIZON,
    DEFAULT_QUAD_POINTS,
    MIN_QUAD_POINTS,
    S_MIN_FRACTION,
    TAU_DENSITY_FLOOR,
    VAR_FLOOR,
)
from incidence import (
    DimensionMismatchError,
    EdgeLaplacian,
    IncidenceLike,
    NodeLaplacian,
    as_entries,
    edge_laplacian,
    node_laplacian,
)
from spectral import SpectralBasis, apply_operator, eigendecompose, from_modes, to_modes
from utils import HedgeError, SeedLike, as_generator

logger = logging.getLogger(__name__)


class ScheduleRangeError(HedgeError, ValueError):
    """Raised when a time lies outside the diffusion horizon [0, S]."""


class ScoreSingularityError(HedgeError, ValueError):
    """Raised when the conditional covariance is too small to invert (s too close to 0)."""


class InvalidDiffusionConfigError(HedgeError, ValueError):
    """Raised when the base mean, OU parameters, quadrature grid or variant are inconsistent."""


class ScheduleKind(str, Enum):
    """Families of the α/β noising schedule."""

    LINEAR = "linear"
    SMOOTHSTEP = "smoothstep"
    # α ≡ 0, β ≡ 1: the pure Ornstein–Uhlenbeck forward process.
    CONSTANT = "constant"


class OperatorVariant(str, Enum):
    """Which sides of the two-sided heat operator are kept."""

    TWO_SIDED = "two_sided"
    NODE_ONLY = "node_only"
    EDGE_ONLY = "edge_only"
    PURE_OU = "pure_ou"


@dataclass(frozen=True)
class DiffusionConfig:
    """Schedule, OU parameters and horizon of the forward process."""

    m0: np.ndarray
    gamma: float = DEFAULT_GAMMA
    tau: float = DEFAULT_GAMMA * 0.25
    horizon: float = DEFAULT_HORIZON
    schedule_kind: ScheduleKind = ScheduleKind.LINEAR
    quad_points: int = DEFAULT_QUAD_POINTS
    variant: OperatorVariant = OperatorVariant.TWO_SIDED

    def __post_init__(self):
        m0 = np.array(self.m0, dtype=np.float64)
        if m0.ndim != 2:
            raise InvalidDiffusionConfigError(f"base mean must be a matrix, got shape {m0.shape}")
        m0.setflags(write=False)
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "schedule_kind", ScheduleKind(self.schedule_kind))
        object.__setattr__(self, "variant", OperatorVariant(self.variant))
        if self.gamma <= 0 or self.horizon <= 0:
            raise InvalidDiffusionConfigError("gamma and horizon must be positive")
        if self.tau < 0:
            raise InvalidDiffusionConfigError("tau must be nonnegative")
        if self.quad_points < MIN_QUAD_POINTS:
            raise InvalidDiffusionConfigError(f"quad_points must be at least {MIN_QUAD_POINTS}")
        if self.variant == OperatorVariant.PURE_OU and self.schedule_kind != ScheduleKind.CONSTANT:
            raise InvalidDiffusionConfigError("the pure_ou variant requires the constant schedule")

    @classmethod
    def from_density(
        cls,
        shape: Tuple[int, int],
        density: float,
        gamma: float = DEFAULT_GAMMA,
        tau: Optional[float] = None,
        horizon: float = DEFAULT_HORIZON,
        schedule_kind: str = ScheduleKind.LINEAR,
        quad_points: int = DEFAULT_QUAD_POINTS,
        variant: str = OperatorVariant.TWO_SIDED,
        base_mean: str = "density",
    ) -> "DiffusionConfig":
        """Build the default configuration matched to a training-batch density ρ̂.

        M₀ = ρ̂·1 (or 0) and τ = γ·ρ̂(1 − ρ̂), so the stationary variance τ/γ
        equals the Bernoulli variance of an entry.
        """
        if not 0.0 <= density <= 1.0:
            raise InvalidDiffusionConfigError(f"density must lie in [0, 1], got {density}")
        if tau is None:
            tau = gamma * max(density * (1.0 - density), TAU_DENSITY_FLOOR)
        if base_mean not in ("density", "zero"):
            raise InvalidDiffusionConfigError(f"unknown base mean {base_mean!r}")
        m0 = np.full(shape, density if base_mean == "density" else 0.0)
        if OperatorVariant(variant) == OperatorVariant.PURE_OU:
            schedule_kind = ScheduleKind.CONSTANT
        return cls(
            m0=m0,
            gamma=gamma,
            tau=tau,
            horizon=horizon,
            schedule_kind=schedule_kind,
            quad_points=quad_points,
            variant=variant,
        )

    @property
    def shape(self) -> Tuple[int, int]:
        """(n, m) of the relaxed states."""
        return self.m0.shape

    @property
    def s_min(self) -> float:
        """Smallest time at which the score is evaluated."""
        return S_MIN_FRACTION * self.horizon

    @property
    def stationary_variance(self) -> float:
        """Variance τ/γ of the Gaussian base law."""
        return self.tau / self.gamma

    def alpha(self, s):
        """Heat weight α(s)."""
        if self.schedule_kind == ScheduleKind.CONSTANT:
            return np.zeros_like(np.asarray(s, dtype=np.float64))
        return 1.0 - self.beta(s)

    def beta(self, s):
        """OU weight β(s)."""
        x = np.asarray(s, dtype=np.float64) / self.horizon
        if self.schedule_kind == ScheduleKind.LINEAR:
            return x
        if self.schedule_kind == ScheduleKind.SMOOTHSTEP:
            return 3.0 * x**2 - 2.0 * x**3
        return np.ones_like(x)

    def cumulative(self, s) -> Tuple[np.ndarray, np.ndarray]:
        """Closed-form (∫₀ˢα, ∫₀ˢβ)."""
        s = np.asarray(s, dtype=np.float64)
        x = s / self.horizon
        if self.schedule_kind == ScheduleKind.LINEAR:
            beta_int = 0.5 * self.horizon * x**2
        elif self.schedule_kind == ScheduleKind.SMOOTHSTEP:
            beta_int = self.horizon * (x**3 - 0.5 * x**4)
        else:
            return np.zeros_like(s), s
        return s - beta_int, beta_int

    def with_variant(self, variant: str) -> "DiffusionConfig":
        """Return a copy using another operator variant (pure_ou switches to the constant schedule)."""
        variant = OperatorVariant(variant)
        kind = self.schedule_kind
        if variant == OperatorVariant.PURE_OU:
            kind = ScheduleKind.CONSTANT
        elif kind == ScheduleKind.CONSTANT:
            kind = ScheduleKind.LINEAR
        return DiffusionConfig(
            m0=self.m0,
            gamma=self.gamma,
            tau=self.tau,
            horizon=self.horizon,
            schedule_kind=kind,
            quad_points=self.quad_points,
            variant=variant,
        )


@dataclass(frozen=True)
class ConditionalMoments:
    """Per-mode mean m̃_ij(s) and variance c_ij(s) of the forward law given H."""

    s: float
    mean_modes: np.ndarray
    var_modes: np.ndarray


def schedule_eval(cfg: DiffusionConfig, s: float) -> Tuple[float, float]:
    """Return (α(s), β(s)) for 0 ≤ s ≤ S."""
    _check_time(cfg, s)
    return float(cfg.alpha(s)), float(cfg.beta(s))


def _check_time(cfg: DiffusionConfig, s: float) -> None:
    if not 0.0 <= s <= cfg.horizon:
        raise ScheduleRangeError(f"time {s} outside [0, {cfg.horizon}]")


def variant_operators(
    h: IncidenceLike, variant: OperatorVariant
) -> Tuple[NodeLaplacian, EdgeLaplacian]:
    """Return (L_V, L_E) with the sides dropped by the variant replaced by zero."""
    entries = as_entries(h)
    variant = OperatorVariant(variant)
    n, m = entries.shape
    if variant in (OperatorVariant.TWO_SIDED, OperatorVariant.NODE_ONLY):
        l_v = node_laplacian(entries)
    else:
        l_v = NodeLaplacian(matrix=np.zeros((n, n)))
    if variant in (OperatorVariant.TWO_SIDED, OperatorVariant.EDGE_ONLY):
        l_e = edge_laplacian(entries)
    else:
        l_e = EdgeLaplacian(
            matrix=np.zeros((m, m)), overlap=np.zeros((m, m)), ov_degrees=np.zeros(m)
        )
    return l_v, l_e


def variant_basis(h: IncidenceLike, variant: OperatorVariant) -> SpectralBasis:
    """Eigendecompose the (possibly masked) operator pair of a hypergraph."""
    return eigendecompose(*variant_operators(h, variant))


class MomentTable:
    """Per-mode integrals of the moment ODEs, accumulated on a fixed time grid.

    The table stores g(t_k) = γ∫β e^{−(B(t_k)−B(u))} and k(t_k) = ∫β e^{−2(B(t_k)−B(u))}
    at t_k = k·S/Q. Queries between grid times take one extra Simpson step.
    """

    def __init__(self, cfg: DiffusionConfig, rates: np.ndarray):
        self.cfg = cfg
        self.rates = rates
        self.step = cfg.horizon / cfg.quad_points
        grid = np.linspace(0.0, cfg.horizon, cfg.quad_points + 1)
        forcing = np.zeros((cfg.quad_points + 1,) + rates.shape)
        kernel = np.zeros_like(forcing)
        for k in range(cfg.quad_points):
            decay, i1, i2 = self._interval(grid[k], grid[k + 1])
            forcing[k + 1] = decay * forcing[k] + cfg.gamma * i1
            kernel[k + 1] = decay**2 * kernel[k] + i2
        self.grid = grid
        self.forcing = forcing
        self.kernel = kernel

    def exponent(self, s) -> np.ndarray:
        """B(s) per mode."""
        a_int, b_int = self.cfg.cumulative(s)
        return self.rates * a_int + self.cfg.gamma * b_int

    def _interval(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        mid = 0.5 * (a + b)
        b_end = self.exponent(b)
        gaps = [b_end - self.exponent(a), b_end - self.exponent(mid)]
        beta = self.cfg.beta
        weights = [float(beta(a)), 4.0 * float(beta(mid)), float(beta(b))]
        width = (b - a) / 6.0
        i1 = width * (weights[0] * np.exp(-gaps[0]) + weights[1] * np.exp(-gaps[1]) + weights[2])
        i2 = width * (
            weights[0] * np.exp(-2.0 * gaps[0]) + weights[1] * np.exp(-2.0 * gaps[1]) + weights[2]
        )
        return np.exp(-gaps[0]), i1, i2

    def integrals(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Return (g(s), k(s)) per mode."""
        k = min(int(np.floor(s / self.step)), self.cfg.quad_points)
        t_k = self.grid[k]
        if s - t_k <= 1e-15 * self.cfg.horizon:
            return self.forcing[k], self.kernel[k]
        decay, i1, i2 = self._interval(t_k, s)
        return decay * self.forcing[k] + self.cfg.gamma * i1, decay**2 * self.kernel[k] + i2


class ForwardProcess:
    """Conditional forward law of one hypergraph with cached spectral data and moments."""

    def __init__(
        self, cfg: DiffusionConfig, h: IncidenceLike, basis: Optional[SpectralBasis] = None
    ):
        self.cfg = cfg
        self.entries = as_entries(h)
        if self.entries.shape != cfg.shape:
            raise DimensionMismatchError(
                f"hypergraph shape {self.entries.shape} does not match base mean {cfg.shape}"
            )
        self.basis = basis if basis is not None else variant_basis(self.entries, cfg.variant)
        self.rates = self.basis.mode_grid().rates
        self.h_modes = to_modes(self.basis, self.entries)
        self.m0_modes = to_modes(self.basis, cfg.m0)
        self._table: Optional[MomentTable] = None
        self._lock = threading.Lock()

    @property
    def table(self) -> MomentTable:
        """Lazily built moment table."""
        with self._lock:
            if self._table is None:
                self._table = MomentTable(self.cfg, self.rates)
            return self._table

    def moments(self, s: float) -> ConditionalMoments:
        """Conditional moments at time s."""
        _check_time(self.cfg, s)
        s = float(s)
        if s == 0.0:
            mean, var = self.h_modes.copy(), np.zeros_like(self.h_modes)
        else:
            forcing, kernel = self.table.integrals(s)
            mean = np.exp(-self.table.exponent(s)) * self.h_modes + forcing * self.m0_modes
            var = 2.0 * self.cfg.tau * kernel
        return ConditionalMoments(s=s, mean_modes=mean, var_modes=var)

    def mean_state(self, s: float) -> np.ndarray:
        """Conditional mean mat(m_s(H)) in state space."""
        return from_modes(self.basis, self.moments(s).mean_modes)

    def sample(self, s: float, seed: SeedLike = None) -> np.ndarray:
        """Draw X_s from the conditional law."""
        return sample_forward_state(self.moments(s), self.basis, seed)

    def log_density(self, x: np.ndarray, s: float) -> float:
        """Log of the explicit Gaussian density N(vec X; m_s(H), C_s(H))."""
        moments = self.moments(s)
        _check_variance(moments)
        residual = to_modes(self.basis, x) - moments.mean_modes
        return float(
            -0.5 * np.sum(residual**2 / moments.var_modes)
            - 0.5 * np.sum(np.log(2.0 * np.pi * moments.var_modes))
        )

    def score(self, x: np.ndarray, s: float) -> np.ndarray:
        """Exact conditional score at X."""
        return conditional_score(self.moments(s), self.basis, x)

    def reverse_drift(self, x: np.ndarray, s: float) -> np.ndarray:
        """Conditional reverse-drift target u*_{s|H}(X)."""
        return conditional_reverse_drift(self.cfg, self.basis, self.entries, x, s, self.moments(s))

    def forward_drift(self, x: np.ndarray, s: float) -> np.ndarray:
        """Conditional forward drift b_{s|H}(X)."""
        return conditional_forward_drift(self.cfg, self.basis, self.entries, x, s)


def conditional_moments(
    cfg: DiffusionConfig, basis: SpectralBasis, h: IncidenceLike, s: float
) -> ConditionalMoments:
    """Per-mode conditional mean and variance of X_s given H."""
    return ForwardProcess(cfg, h, basis).moments(s)


def sample_forward_state(
    moments: ConditionalMoments, basis: SpectralBasis, seed: SeedLike = None
) -> np.ndarray:
    """Sample X_s = from_modes(m̃ + √c ⊙ ξ) with ξ i.i.d. standard normal."""
    rng = as_generator(seed)
    noise = rng.standard_normal(moments.mean_modes.shape)
    return from_modes(basis, moments.mean_modes + np.sqrt(moments.var_modes) * noise)


def _check_variance(moments: ConditionalMoments, var_floor: float = VAR_FLOOR) -> None:
    if np.any(moments.var_modes <= var_floor):
        raise ScoreSingularityError(
            f"conditional variance below {var_floor} at s={moments.s}; the score is singular"
        )


def conditional_score(
    moments: ConditionalMoments, basis: SpectralBasis, x: np.ndarray, var_floor: float = VAR_FLOOR
) -> np.ndarray:
    """Exact conditional score −mat(C_s⁻¹(vec X − m_s)) computed per mode."""
    _check_variance(moments, var_floor)
    return from_modes(basis, -(to_modes(basis, x) - moments.mean_modes) / moments.var_modes)


def conditional_forward_drift(
    cfg: DiffusionConfig, basis: SpectralBasis, h: IncidenceLike, x: np.ndarray, s: float
) -> np.ndarray:
    """Conditional forward drift b_{s|H}(X) = −α(s)𝒜_H(X) − β(s)γ(X − M₀)."""
    alpha, beta = schedule_eval(cfg, s)
    x = np.asarray(x, dtype=np.float64)
    if as_entries(h).shape != x.shape[-2:]:
        raise DimensionMismatchError(f"state shape {x.shape} does not match hypergraph")
    return -alpha * apply_operator(basis, x) - beta * cfg.gamma * (x - cfg.m0)


def conditional_reverse_drift(
    cfg: DiffusionConfig,
    basis: SpectralBasis,
    h: IncidenceLike,
    x: np.ndarray,
    s: float,
    moments: Optional[ConditionalMoments] = None,
) -> np.ndarray:
    """Conditional reverse-drift target u*_{s|H}(X) = −b_{s|H}(X) + 2τβ(s)·∇log p_{s|H}(X)."""
    _check_time(cfg, s)
    if s < cfg.s_min:
        raise ScoreSingularityError(f"score evaluation below s_min={cfg.s_min} rejected (s={s})")
    if moments is None:
        moments = conditional_moments(cfg, basis, h, s)
    beta = float(cfg.beta(s))
    score = conditional_score(moments, basis, x)
    return -conditional_forward_drift(cfg, basis, h, x, s) + 2.0 * cfg.tau * beta * score


@dataclass
class MixtureOracle:
    """Explicit posterior quantities of the forward marginal of a finite dataset.

    The forward marginal at time s is the equal-weight mixture of the
    conditional Gaussians of the dataset elements.
    """

    processes: Sequence[ForwardProcess]
    weights: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if not self.processes:
            raise ValueError("mixture oracle needs at least one hypergraph")
        if self.weights is None:
            self.weights = np.full(len(self.processes), 1.0 / len(self.processes))

    def _log_components(self, x: np.ndarray, s: float) -> np.ndarray:
        return np.log(self.weights) + np.array([p.log_density(x, s) for p in self.processes])

    def log_density(self, x: np.ndarray, s: float) -> float:
        """log p̂_s(X)."""
        return float(logsumexp(self._log_components(x, s)))

    def posterior_weights(self, x: np.ndarray, s: float) -> np.ndarray:
        """π_s(i | X)."""
        return softmax(self._log_components(x, s))

    def _average(self, values: Sequence[np.ndarray], x: np.ndarray, s: float) -> np.ndarray:
        return np.tensordot(self.posterior_weights(x, s), np.stack(values), axes=1)

    def score(self, x: np.ndarray, s: float) -> np.ndarray:
        """Posterior-averaged conditional score Σπ_i·r*_{s|Hⁱ}(X)."""
        return self._average([p.score(x, s) for p in self.processes], x, s)

    def marginal_forward_drift(self, x: np.ndarray, s: float) -> np.ndarray:
        """b̄_s(X) = Σπ_i·b_{s|Hⁱ}(X)."""
        return self._average([p.forward_drift(x, s) for p in self.processes], x, s)

    def l2_optimal_drift(self, x: np.ndarray, s: float) -> np.ndarray:
        """u^{L2}_s(X) = Σπ_i·u*_{s|Hⁱ}(X), the population minimiser of the regression loss."""
        return self._average([p.reverse_drift(x, s) for p in self.processes], x, s)
