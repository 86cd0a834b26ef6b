"""Brownian functionals per step and coupled refinement of paths.

For one noise channel each step of size ``h`` carries the pair
``(dW, dZ) = (W(h), int_0^h W(s) ds)``, jointly Gaussian with
``Var dW = h``, ``Var dZ = h^3/3`` and ``Cov = h^2/2``.  Every integral the
order 1.5 family needs follows from the pair:

    I(1) = dW          I(1,1) = (dW^2 - h)/2      I(1,1,1) = (dW^3 - 3 h dW)/6
    I(1,0) = dZ        I(0,1) = h dW - dZ         I(0) = h,  I(0,0) = h^2/2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IncrementBatch",
    "PathPlan",
    "aggregate",
    "aggregate_pair",
    "increments_from_normals",
    "iterated_integrals",
    "path_generator",
    "sample_increments",
]


def increments_from_normals(h: float, xi1, xi2):
    """Map independent standard normals to the exact law of ``(dW, dZ)``."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    dW = np.sqrt(h) * xi1
    dZ = h**1.5 * (0.5 * xi1 + xi2 / (2.0 * np.sqrt(3.0)))
    return dW, dZ


def sample_increments(h: float, rng: np.random.Generator, size=None):
    if h <= 0:
        raise ValueError("step size must be positive")
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    xi = rng.standard_normal((2,) + shape)
    return increments_from_normals(h, xi[0], xi[1])


def aggregate_pair(first, second, h: float):
    """Combine two consecutive steps of size ``h`` into one of size ``2h``."""
    w1, z1 = first
    w2, z2 = second
    return w1 + w2, z1 + z2 + h * w1


def aggregate(dW, dZ, h: float, factor: int):
    """Merge ``factor`` consecutive steps along the last axis.

    ``dZ`` of the merged step is ``sum_i (dZ_i + h * sum_{j<i} dW_j)``.
    """
    dW = np.asarray(dW, dtype=float)
    dZ = np.asarray(dZ, dtype=float)
    n = dW.shape[-1]
    if n % factor:
        raise ValueError(f"{n} steps cannot be merged in groups of {factor}")
    shape = dW.shape[:-1] + (n // factor, factor)
    w = dW.reshape(shape)
    z = dZ.reshape(shape)
    before = np.cumsum(w, axis=-1) - w
    return w.sum(axis=-1), (z + h * before).sum(axis=-1)


def iterated_integrals(dW, dZ, h: float) -> dict[tuple[int, ...], object]:
    """Sampled values of every word of order ``<= 3/2`` over one channel."""
    dW = np.asarray(dW, dtype=float)
    dZ = np.asarray(dZ, dtype=float)
    return {
        (): 1.0,
        (0,): h,
        (1,): dW,
        (1, 1): 0.5 * (dW * dW - h),
        (1, 0): dZ,
        (0, 1): h * dW - dZ,
        (0, 0): 0.5 * h * h,
        (1, 1, 1): (dW**3 - 3.0 * h * dW) / 6.0,
    }


def path_generator(seed: int, path: int) -> np.random.Generator:
    """Counter-based stream for one path, independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, path])))


@dataclass
class IncrementBatch:
    """Per-step ``(dW, dZ)`` for a batch of paths: arrays of shape ``(M, N)``."""

    dW: np.ndarray
    dZ: np.ndarray
    h: float

    @property
    def steps(self) -> int:
        return self.dW.shape[-1]

    def coarsen(self, factor: int) -> IncrementBatch:
        dW, dZ = aggregate(self.dW, self.dZ, self.h, factor)
        return IncrementBatch(dW, dZ, self.h * factor)

    def brownian_endpoint(self) -> np.ndarray:
        return self.dW.sum(axis=-1)


class PathPlan:
    """Brownian paths sampled once at the finest resolution and aggregated.

    The base grid has ``base_factor * 2**finest`` steps on ``[0, T]``; level
    ``L`` (``h = T / 2**L``) is obtained by merging ``base_factor`` steps and
    then pairs of steps, so all levels see the same path.
    """

    def __init__(self, seed: int, paths, finest: int, T: float = 1.0, base_factor: int = 1):
        self.seed = int(seed)
        self.paths = list(paths)
        self.finest = int(finest)
        self.T = float(T)
        self.base_factor = int(base_factor)
        n = self.base_factor * 2**self.finest
        h = self.T / n
        xi = np.stack([path_generator(self.seed, i).standard_normal((2, n)) for i in self.paths])
        dW, dZ = increments_from_normals(h, xi[:, 0], xi[:, 1])
        self.base = IncrementBatch(dW, dZ, h)
        self._levels: dict[int, IncrementBatch] = {}

    def level(self, L: int) -> IncrementBatch:
        if L > self.finest:
            raise ValueError(f"level {L} is finer than the plan's finest level {self.finest}")
        if L not in self._levels:
            if L == self.finest:
                batch = self.base.coarsen(self.base_factor) if self.base_factor > 1 else self.base
            else:
                batch = self.level(L + 1).coarsen(2)
            self._levels[L] = batch
        return self._levels[L]
