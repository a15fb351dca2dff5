"""Vectors, balls, and spherical cap fractions.

Everything is plain float64 numpy.  The cap helpers quantify how much of a
unit ball lies on the far side of a hyperplane, which is what all the
probability bounds in :mod:`fewpatch.bounds` reduce to.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import ContractViolationError, DimensionMismatchError, ZeroMeanError

__all__ = [
    "Ball",
    "as_vector",
    "ball_contains",
    "cap_fraction_bound",
    "cap_fraction_exact",
    "dot",
    "norm",
    "normalize",
]


def as_vector(x) -> np.ndarray:
    """Coerce to a 1-D float64 array and validate it.

    Raises ContractViolationError on empty, non-1-D or non-finite input.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ContractViolationError("expected a 1-D vector, got ndim=%d" % a.ndim)
    if a.size == 0:
        raise ContractViolationError("expected a nonempty vector")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError("vector has non-finite entries")
    return a


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            "dimension mismatch: %d vs %d" % (a.shape[0], b.shape[0])
        )


def dot(a, b) -> float:
    """Inner product of two vectors of equal dimension."""
    va = as_vector(a)
    vb = as_vector(b)
    _check_same_dim(va, vb)
    return float(np.dot(va, vb))


def norm(a) -> float:
    """Euclidean norm."""
    va = as_vector(a)
    return float(np.sqrt(np.dot(va, va)))


def normalize(a) -> np.ndarray:
    """Return a / ||a||.  Raises ZeroMeanError when ||a|| = 0."""
    va = as_vector(a)
    nm = float(np.sqrt(np.dot(va, va)))
    if nm == 0.0:
        raise ZeroMeanError("cannot normalize the zero vector")
    return va / nm


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball with center and radius > 0."""

    center: np.ndarray = field()
    radius: float = 1.0

    def __post_init__(self):
        c = as_vector(self.center).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0.0):
            raise ContractViolationError("ball radius must be finite and > 0")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])


def ball_contains(ball: Ball, x, rel_tol: float = 1e-12) -> bool:
    """Membership test with a relative slack on the radius.

    True iff ||x - center|| <= radius * (1 + rel_tol).
    """
    vx = as_vector(x)
    _check_same_dim(vx, ball.center)
    return norm(vx - ball.center) <= ball.radius * (1.0 + rel_tol)


def _check_cap_args(n: int, a: float) -> tuple[int, float]:
    n = int(n)
    if n < 1:
        raise ContractViolationError("cap dimension must be >= 1")
    a = float(a)
    if not (0.0 <= a <= 1.0):
        raise ContractViolationError("cap offset a must lie in [0, 1]")
    return n, a


def cap_fraction_bound(n: int, a: float) -> float:
    """Upper bound (1/2) * (1 - a^2)^(n/2) on the cap volume fraction.

    Bounds the fraction of the unit n-ball with first coordinate >= a.
    """
    n, a = _check_cap_args(n, a)
    return 0.5 * (1.0 - a * a) ** (n / 2.0)


def cap_fraction_exact(n: int, a: float) -> float:
    """Exact cap volume fraction of the unit n-ball at offset a.

    Equals (1/2) * I_{1-a^2}((n+1)/2, 1/2) with I the regularized
    incomplete beta function.
    """
    n, a = _check_cap_args(n, a)
    return 0.5 * float(betainc((n + 1) / 2.0, 0.5, 1.0 - a * a))
