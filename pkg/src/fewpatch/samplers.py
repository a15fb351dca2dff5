"""Seeded sampling from ball distributions.

Draws are produced by a counter-based generator (Philox4x32-10, Marsaglia
polar for gaussians), so a given (seed, count) request returns the same
bytes on every run, on every backend, at any thread count.

A :class:`BallDistribution` couples a support ball with a radial shape and
certifies the two constants every probability bound needs: a density
constant C with density(x) <= C / (ball volume) * scale^n, and the scale
1/v that rescales the support to the unit ball.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _rng
from ._backend import backend
from .errors import ContractViolationError
from .geometry import Ball

__all__ = [
    "BallDistribution",
    "RadialPower",
    "Seed",
    "UniformBall",
    "certified_constants",
    "sample",
    "sample_uniform",
    "sample_unit_sphere",
    "sample_unit_sphere_direction",
]

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class UniformBall:
    """Uniform density over the support ball."""


@dataclass(frozen=True)
class RadialPower:
    """Density proportional to ||x - center||^alpha over the support ball.

    alpha = 0 recovers the uniform shape; larger alpha pushes mass toward
    the boundary sphere.
    """

    alpha: float = 0.0

    def __post_init__(self):
        a = float(self.alpha)
        if not (np.isfinite(a) and a >= 0.0):
            raise ContractViolationError("RadialPower alpha must be finite and >= 0")
        object.__setattr__(self, "alpha", a)


Shape = Union[UniformBall, RadialPower]


@dataclass(frozen=True)
class BallDistribution:
    """A radially symmetric distribution supported on a ball."""

    support: Ball
    shape: Shape = UniformBall()

    def __post_init__(self):
        if not isinstance(self.support, Ball):
            raise ContractViolationError("support must be a Ball")
        if not isinstance(self.shape, (UniformBall, RadialPower)):
            raise ContractViolationError("shape must be UniformBall or RadialPower")

    @property
    def dim(self) -> int:
        return self.support.dim

    def radial_exponent(self) -> float:
        """Reciprocal exponent p with radius = v * u^p for uniform u.

        Sampling radius r = v * u^(1/(n+alpha)) gives the density
        proportional to r^alpha in dimension n.
        """
        n = self.dim
        if isinstance(self.shape, RadialPower):
            return 1.0 / (n + self.shape.alpha)
        return 1.0 / n


@dataclass(frozen=True)
class Seed:
    """Root seed plus a stream index; distinct streams are independent."""

    root: int
    stream: int = 0

    def __post_init__(self):
        for name, value in (("root", self.root), ("stream", self.stream)):
            if not isinstance(value, int) or not (0 <= value <= _U64_MAX):
                raise ContractViolationError(
                    "%s must be an integer in [0, 2^64)" % name
                )


def certified_constants(dist: BallDistribution) -> tuple[float, float]:
    """Return (C, scale) certified for the distribution.

    The density is bounded by C / V_n(B) * scale^n where V_n(B) is the
    volume of the unit ball scaled to the support, i.e. C is the maximum
    density ratio against the uniform density on the support and scale is
    1 / radius.  UniformBall gives C = 1; RadialPower(alpha) gives
    C = (n + alpha) / n, attained at the boundary.
    """
    v = dist.support.radius
    if isinstance(dist.shape, RadialPower):
        n = dist.dim
        return (n + dist.shape.alpha) / n, 1.0 / v
    return 1.0, 1.0 / v


def _check_count(count: int) -> int:
    count = int(count)
    if count < 1:
        raise ContractViolationError("count must be >= 1")
    return count


def sample(
    dist: BallDistribution, seed: Seed, count: int, *, fold: bool = False
) -> np.ndarray:
    """Draw ``count`` points from the distribution, shape (count, dim).

    With ``fold=True`` every coordinate is reflected to be nonnegative,
    which restricts the distribution to the closed nonnegative orthant;
    that is only meaningful for an origin-centered support, so any other
    center is rejected.
    """
    count = _check_count(count)
    if fold and np.any(dist.support.center != 0.0):
        raise ContractViolationError("fold requires an origin-centered support")
    key_lo, key_hi = _rng.derive_key(seed.root, seed.stream, _rng.DOMAIN_SAMPLE)
    return backend.ball_sample(
        key_lo,
        key_hi,
        0,
        count,
        dist.dim,
        dist.support.center,
        dist.support.radius,
        dist.radial_exponent(),
        1 if fold else 0,
    )


def sample_unit_sphere(n: int, seed: Seed, count: int) -> np.ndarray:
    """Draw ``count`` unit directions uniformly on the sphere S^(n-1)."""
    n = int(n)
    if n < 1:
        raise ContractViolationError("dimension must be >= 1")
    count = _check_count(count)
    key_lo, key_hi = _rng.derive_key(seed.root, seed.stream, _rng.DOMAIN_SPHERE)
    return backend.sphere_sample(key_lo, key_hi, 0, count, n)


def sample_unit_sphere_direction(n: int, seed: Seed) -> np.ndarray:
    """Draw one unit direction uniformly on the sphere S^(n-1)."""
    return sample_unit_sphere(n, seed, 1)[0]


def sample_uniform(seed: Seed, count: int) -> np.ndarray:
    """Draw ``count`` uniform variates on [0, 1)."""
    count = _check_count(count)
    key_lo, key_hi = _rng.derive_key(seed.root, seed.stream, _rng.DOMAIN_UNIFORM)
    return backend.uniform_sample(key_lo, key_hi, 0, count)
