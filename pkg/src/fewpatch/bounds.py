"""Closed-form probability bounds for mean-direction patches.

Conventions shared by every function here:

* n is the latent dimension, k the number of examples the patch is built
  from, v the radius of the ball the examples are drawn from.
* (C, scale) pairs certify densities: the example distribution is bounded
  by C_new / V * rho^n against its support ball of volume V, the base
  distribution by C_x / V_1 * r^n against the unit ball.
* Every bound is returned as a :class:`BoundValue` keeping the raw value
  (which may be negative), its clamp to [0, 1], and a vacuous flag set
  exactly when raw <= 0.

Powers x^n are evaluated as exp(n * log x) so that very large n degrades
to 0.0 gracefully instead of underflowing term by term.
"""

import math
from dataclasses import dataclass

from .errors import ContractViolationError, DeltaNotPositiveError

__all__ = [
    "BoundInputs",
    "BoundValue",
    "Theorem2Bounds",
    "delta_cap",
    "lemma1_A1_bound",
    "lemma1_A1A2_bound",
    "lemma2_interval",
    "lemma2_prob_bounds",
    "pe_bound",
    "theorem2_bounds",
]


@dataclass(frozen=True)
class BoundValue:
    """A probability lower bound: raw formula value, clamp, vacuity."""

    raw: float
    clamped: float
    vacuous: bool

    @classmethod
    def from_raw(cls, raw: float) -> "BoundValue":
        raw = float(raw)
        return cls(raw=raw, clamped=min(1.0, max(0.0, raw)), vacuous=raw <= 0.0)


def _pow_n(base: float, n: int) -> float:
    """base^n for base >= 0 via exp(n * log base)."""
    if base < 0.0:
        raise ContractViolationError("power base must be >= 0")
    if base == 0.0:
        return 0.0
    x = n * math.log(base)
    if x > 700.0:
        return math.inf
    return math.exp(x)


def _check_dim(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ContractViolationError("dimension n must be >= 1")
    return n


def _check_count(k: int) -> int:
    k = int(k)
    if k < 1:
        raise ContractViolationError("example count k must be >= 1")
    return k


def _check_positive(name: str, x: float) -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise ContractViolationError("%s must be finite and > 0" % name)
    return x


def _check_open_unit(name: str, x: float) -> float:
    x = float(x)
    if not (0.0 < x < 1.0):
        raise ContractViolationError("%s must lie in (0, 1)" % name)
    return x


def pe_bound(theta: float, n: int, c_x: float = 1.0, r: float = 1.0) -> BoundValue:
    """Lower bound on agreement with the base classifier off the patch.

    For a threshold patch at offset theta >= 0 and a base distribution on
    the unit ball with certified (C_x, r):

        p_e = 1 - (C_x / 2) * (r * sqrt(1 - theta^2))^n

    For theta > 1 the patch half-space misses the unit ball entirely, so
    the probability is exactly 1.
    """
    n = _check_dim(n)
    c_x = _check_positive("c_x", c_x)
    r = _check_positive("r", r)
    theta = float(theta)
    if theta < 0.0:
        raise ContractViolationError("theta must be >= 0")
    if theta > 1.0:
        return BoundValue.from_raw(1.0)
    return BoundValue.from_raw(
        1.0 - 0.5 * c_x * _pow_n(r * math.sqrt(1.0 - theta * theta), n)
    )


def lemma1_A1_bound(
    n: int,
    k: int,
    delta: float,
    rho: float = 1.0,
    v: float = 1.0,
    c_new: float = 1.0,
) -> BoundValue:
    """Lower bound on pairwise quasi-orthogonality around the center.

    A1 is the event |<x_i - c, x_j - c>| <= delta * v for all i < j:

        P(A1) >= 1 - C_new * (k(k-1)/2) * (rho * v * sqrt(1 - delta^2))^n
    """
    n = _check_dim(n)
    k = _check_count(k)
    delta = _check_open_unit("delta", delta)
    rho = _check_positive("rho", rho)
    v = _check_positive("v", v)
    c_new = _check_positive("c_new", c_new)
    pairs = k * (k - 1) / 2.0
    base = rho * v * math.sqrt(1.0 - delta * delta)
    return BoundValue.from_raw(1.0 - c_new * pairs * _pow_n(base, n))


def lemma1_A1A2_bound(
    n: int,
    k: int,
    delta: float,
    eps: float,
    rho: float = 1.0,
    v: float = 1.0,
    c_new: float = 1.0,
) -> BoundValue:
    """Lower bound on quasi-orthogonality plus the norm floor.

    A2 is the event ||x_i - c|| >= (1 - eps) * v for all i:

        P(A1 and A2) >= 1 - C_new * k * (rho * v * (1 - eps))^n
                          - C_new * (k(k-1)/2) * (rho * v * sqrt(1 - delta^2))^n
    """
    n = _check_dim(n)
    k = _check_count(k)
    delta = _check_open_unit("delta", delta)
    eps = _check_open_unit("eps", eps)
    rho = _check_positive("rho", rho)
    v = _check_positive("v", v)
    c_new = _check_positive("c_new", c_new)
    pairs = k * (k - 1) / 2.0
    norm_term = c_new * k * _pow_n(rho * v * (1.0 - eps), n)
    pair_term = c_new * pairs * _pow_n(rho * v * math.sqrt(1.0 - delta * delta), n)
    return BoundValue.from_raw(1.0 - norm_term - pair_term)


def lemma2_interval(k: int, v: float, delta: float, eps: float) -> tuple[float, float]:
    """Deterministic squared-norm interval for the empirical mean.

    On the event A1 and A2, ||mean - c||^2 lies in [L, U] with

        U = v^2 / k + ((k-1)/k) * v * delta
        L = (1-eps)^2 * v^2 / k - ((k-1)/k) * v * delta

    L may be negative; callers clamp it at 0 when used as a bound on a
    nonnegative quantity.
    """
    k = _check_count(k)
    v = _check_positive("v", v)
    delta = _check_open_unit("delta", delta)
    eps = _check_open_unit("eps", eps)
    cross = (k - 1) / k * v * delta
    upper = v * v / k + cross
    lower = (1.0 - eps) ** 2 * v * v / k - cross
    return lower, upper


def lemma2_prob_bounds(
    n: int,
    k: int,
    delta: float,
    eps: float,
    rho: float = 1.0,
    v: float = 1.0,
    c_new: float = 1.0,
) -> tuple[BoundValue, BoundValue]:
    """Probability bounds attached to the lemma2 interval.

    Returns (two_sided, upper_only): the two-sided containment holds with
    the A1-and-A2 probability, the upper end alone with the A1
    probability.
    """
    two_sided = lemma1_A1A2_bound(n, k, delta, eps, rho=rho, v=v, c_new=c_new)
    upper_only = lemma1_A1_bound(n, k, delta, rho=rho, v=v, c_new=c_new)
    return two_sided, upper_only


def delta_cap(norm_mean: float, k: int, v: float, delta: float) -> float:
    """Margin ||mean|| - sqrt(U) of the mean over the lemma2 upper root.

    Positive iff the empirical mean sticks out of the ball that the
    training points are guaranteed (on A1) to keep it in.
    """
    norm_mean = float(norm_mean)
    if not (math.isfinite(norm_mean) and norm_mean >= 0.0):
        raise ContractViolationError("norm_mean must be finite and >= 0")
    k = _check_count(k)
    v = _check_positive("v", v)
    delta = _check_open_unit("delta", delta)
    upper = v * v / k + (k - 1) / k * v * delta
    return norm_mean - math.sqrt(upper)


@dataclass(frozen=True)
class BoundInputs:
    """Everything the few-shot (theorem 2 style) bounds depend on."""

    n: int
    k: int
    v: float
    delta: float
    theta: float
    norm_mean: float
    rho: float = 1.0
    c_new: float = 1.0
    c_x: float = 1.0
    r: float = 1.0


@dataclass(frozen=True)
class Theorem2Bounds:
    """Result of :func:`theorem2_bounds`.

    new_label bounds the probability that a fresh cluster point is
    captured; base_agreement bounds agreement with the base classifier on
    fresh base points.  The two factors of the new-label bound are kept
    for inspection.
    """

    new_label: BoundValue
    base_agreement: BoundValue
    delta_cap: float
    theta_lo: float
    theta_hi: float
    factor_cap: float
    factor_pairs: float


def _theorem2_factors(
    n: int,
    k: int,
    v: float,
    delta: float,
    d: float,
    theta: float,
    rho: float = 1.0,
    c_new: float = 1.0,
) -> tuple[float, float]:
    """Raw factors of the new-label bound at margin d and threshold theta.

    Shared by :func:`theorem2_bounds` and the per-trial experiment path,
    which already holds the margin and must not recompute it from a
    reconstructed ||mean||.
    """
    n = _check_dim(n)
    k = _check_count(k)
    v = _check_positive("v", v)
    delta = _check_open_unit("delta", delta)
    rho = _check_positive("rho", rho)
    c_new = _check_positive("c_new", c_new)
    d = float(d)
    if d <= 0.0:
        raise ContractViolationError("margin d must be > 0")
    lo = max(d - v, 0.0)
    theta = float(theta)
    slack = 1e-9 * max(1.0, abs(d))
    if not (lo - slack <= theta <= d + slack):
        raise ContractViolationError(
            "theta=%.17g outside [%.17g, %.17g]" % (theta, lo, d)
        )
    gap = d - theta
    inside = v * v - gap * gap
    if inside < 0.0:
        inside = 0.0
    factor_cap = 1.0 - 0.5 * c_new * _pow_n(rho * math.sqrt(inside), n)
    pairs = k * (k - 1) / 2.0
    factor_pairs = 1.0 - c_new * pairs * _pow_n(
        rho * v * math.sqrt(1.0 - delta * delta), n
    )
    return factor_cap, factor_pairs


def _combine_factors(factor_cap: float, factor_pairs: float) -> BoundValue:
    """Product when both factors are positive, else the smaller factor.

    Keeps raw <= 0 exactly when either factor is nonpositive, so the
    clamped value is always the product of the clamped factors.
    """
    if factor_cap > 0.0 and factor_pairs > 0.0:
        raw = factor_cap * factor_pairs
    else:
        raw = min(factor_cap, factor_pairs)
    return BoundValue.from_raw(raw)


def theorem2_bounds(inputs: BoundInputs) -> Theorem2Bounds:
    """Few-shot patch bounds at a threshold theta in [max(D-v, 0), D].

    D = delta_cap(...) must be positive.  The new-label bound is

        p_n = (1 - (C_new/2) * (rho * sqrt(v^2 - (D - theta)^2))^n)
            * (1 - C_new * (k(k-1)/2) * (rho * v * sqrt(1 - delta^2))^n)

    taken as the product when both factors are positive and as the
    smaller (already nonpositive) factor otherwise, so the clamped value
    is always the product of the clamped factors.  The base-agreement
    bound is :func:`pe_bound` at the same theta.
    """
    d = delta_cap(inputs.norm_mean, inputs.k, inputs.v, inputs.delta)
    if d <= 0.0:
        raise DeltaNotPositiveError(inputs.norm_mean, inputs.norm_mean - d)
    factor_cap, factor_pairs = _theorem2_factors(
        inputs.n,
        inputs.k,
        inputs.v,
        inputs.delta,
        d,
        inputs.theta,
        rho=inputs.rho,
        c_new=inputs.c_new,
    )
    return Theorem2Bounds(
        new_label=_combine_factors(factor_cap, factor_pairs),
        base_agreement=pe_bound(inputs.theta, inputs.n, c_x=inputs.c_x, r=inputs.r),
        delta_cap=d,
        theta_lo=max(d - float(inputs.v), 0.0),
        theta_hi=d,
        factor_cap=factor_cap,
        factor_pairs=factor_pairs,
    )
