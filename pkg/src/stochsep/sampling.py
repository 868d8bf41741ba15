"""Seeded, reproducible samplers for the experiment distributions.

Streams are built on the counter-based Philox generator keyed by
(master_seed, stream_id), so identical seeds reproduce matrices bit for
bit no matter how many workers run, and child streams derived for
parallel repeats are independent by key separation rather than by
sequence jumping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KINDS",
    "SeedSpec",
    "DistributionSpec",
    "derive_stream",
    "generator",
    "sample",
]

KINDS = ("ball", "cube", "gaussian", "ellipsoid")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class SeedSpec:
    """A (master seed, stream id) pair identifying one random stream."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_stream(seed: SeedSpec, index: int) -> SeedSpec:
    """Deterministic child stream for parallel repeat number ``index``.

    Distinct indexes under one parent map to distinct stream ids (the
    pre-mix step is injective in the index, the mixer is a bijection), so
    workers can derive their streams in any order.
    """
    if index < 0:
        raise ValueError(f"stream index must be >= 0, got {index!r}")
    child = _splitmix64((seed.stream_id + (index + 1) * _GOLDEN) & _MASK64)
    return SeedSpec(seed.master_seed, child)


def generator(seed: SeedSpec) -> np.random.Generator:
    """Philox generator keyed by the seed spec."""
    key = np.array([seed.master_seed, seed.stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class DistributionSpec:
    """One of the supported sampling distributions.

    ``semi_axes`` is required for (and only for) the ellipsoid kind and
    holds the n semi-principal axis lengths.
    """

    kind: str
    n: int
    semi_axes: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError(f"dimension n must be >= 1, got {self.n!r}")
        if self.kind == "ellipsoid":
            if self.semi_axes is None:
                raise ValueError("ellipsoid distribution requires semi_axes")
            if len(self.semi_axes) != self.n:
                raise ValueError(
                    f"semi_axes length {len(self.semi_axes)} does not match n={self.n}"
                )
            if any(not c > 0 for c in self.semi_axes):
                raise ValueError("all semi_axes must be positive")
        elif self.semi_axes is not None:
            raise ValueError(f"semi_axes only apply to the ellipsoid kind, not {self.kind!r}")


def _ball(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    # Gaussian direction + u^(1/n) radius; rejection is hopeless past n ~ 40.
    g = rng.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1)
    while True:
        degenerate = norms == 0.0
        if not degenerate.any():
            break
        k = int(degenerate.sum())
        g[degenerate] = rng.standard_normal((k, n))
        norms[degenerate] = np.linalg.norm(g[degenerate], axis=1)
    radii = rng.random(m) ** (1.0 / n)
    return g * (radii / norms)[:, None]


def sample(dist: DistributionSpec, m: int, seed: SeedSpec) -> np.ndarray:
    """Draw m i.i.d. rows from the distribution as an (m, n) float64 matrix."""
    if m < 1:
        raise ValueError(f"sample size m must be >= 1, got {m!r}")
    rng = generator(seed)
    if dist.kind == "cube":
        return rng.uniform(-1.0, 1.0, size=(m, dist.n))
    if dist.kind == "gaussian":
        return rng.standard_normal((m, dist.n))
    x = _ball(rng, m, dist.n)
    if dist.kind == "ellipsoid":
        x = x * np.asarray(dist.semi_axes, dtype=np.float64)
    return x
