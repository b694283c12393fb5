"""Finite-mode multiplicative noise ``sum_k mu_k X e_k d beta_k``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .hspace import Field, Grid

__all__ = [
    "NoiseModel",
    "RngStream",
    "cn_constant",
    "hs_condition_partial",
    "sigma_apply",
    "sample_increment",
]


@dataclass(frozen=True)
class NoiseModel:
    """``N = len(amplitudes)`` modes on ``grid``; ``N = 0`` is deterministic."""

    grid: Grid
    amplitudes: tuple[float, ...] = ()

    def __post_init__(self):
        mu = tuple(float(m) for m in self.amplitudes)
        if any(not math.isfinite(m) or m < 0 for m in mu):
            raise ValueError(f"noise amplitudes must be finite and nonnegative, got {mu}")
        object.__setattr__(self, "amplitudes", mu)

    @property
    def N(self) -> int:
        return len(self.amplitudes)

    @property
    def is_deterministic(self) -> bool:
        return not any(self.amplitudes)

    @cached_property
    def modes(self) -> np.ndarray:
        """``(N, n)`` array of ``e_k = sqrt(2/pi) sin(k xi)`` at the nodes."""
        k = np.arange(1, self.N + 1)[:, None]
        return math.sqrt(2.0 / math.pi) * np.sin(k * self.grid.nodes[None, :])

    @cached_property
    def weighted_modes(self) -> np.ndarray:
        return np.asarray(self.amplitudes)[:, None] * self.modes

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(self.grid, tuple(factor * m for m in self.amplitudes))


@dataclass
class RngStream:
    """Gaussian stream keyed by ``(seed, trajectory_id)``.

    Draws for step ``k`` come from a Philox block at counter ``k``, so any
    step can be regenerated without replaying earlier ones and distinct
    trajectories never share a key.
    """

    seed: int
    trajectory_id: int = 0
    step: int = field(default=0)

    def __post_init__(self):
        self._key = np.array([self.seed % 2**64, self.trajectory_id % 2**64], dtype=np.uint64)

    def normals_at(self, step: int, size: int) -> np.ndarray:
        bitgen = np.random.Philox(counter=[0, step, 0, 0], key=self._key)
        return np.random.Generator(bitgen).standard_normal(size)

    def normals(self, size: int) -> np.ndarray:
        out = self.normals_at(self.step, size)
        self.step += 1
        return out


def cn_constant(model: NoiseModel) -> float:
    """``(pi / 4) * sum_k (1 + k)^2 mu_k^2``."""
    mu = np.asarray(model.amplitudes)
    k = np.arange(1, mu.size + 1)
    return float(math.pi / 4.0 * np.sum((1.0 + k) ** 2 * mu**2))


def hs_condition_partial(mu: Sequence[float], K: int) -> float:
    """``sum_{k <= K} mu_k^2 k^4`` (continuum eigenvalues ``k^2``)."""
    if K > len(mu):
        raise ValueError(f"K={K} exceeds the {len(mu)} available amplitudes")
    m = np.asarray(mu[:K], dtype=float)
    k = np.arange(1, K + 1)
    return float(np.sum(m**2 * k**4.0))


def sigma_apply(model: NoiseModel, X: Field, h_coeffs: Sequence[float]) -> Field:
    """``sigma(X) h = sum_k mu_k X <h, e_k> e_k`` given the coefficients ``<h, e_k>``."""
    c = np.asarray(h_coeffs, dtype=float)
    if c.shape != (model.N,):
        raise ValueError(f"expected {model.N} coefficients, got shape {c.shape}")
    return Field(X.grid, X.values * (c @ model.weighted_modes))


def noise_field(model: NoiseModel, dt: float, rng: RngStream) -> np.ndarray:
    """``sum_k mu_k e_k d beta_k`` for one step; advances ``rng``."""
    db = math.sqrt(dt) * rng.normals(model.N)
    return db @ model.weighted_modes


def sample_increment(model: NoiseModel, X: Field, dt: float, rng: RngStream) -> Field:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    return Field(X.grid, X.values * noise_field(model, dt, rng))
