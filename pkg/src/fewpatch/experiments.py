"""Seeded Monte Carlo experiments that certify the closed-form bounds.

Each runner draws ``trials`` independent repetitions (one Philox stream
per trial), estimates event probabilities with 99% Wilson intervals, and
compares them against the matching bound from :mod:`fewpatch.bounds`.
A bound is flagged ``BoundViolated`` only when the entire confidence
interval sits below its clamped value, ``BoundVacuous`` when the raw
value is <= 0, and ``BoundRespected`` otherwise.

Outputs are pure functions of (parameters, seed).  The worker thread
count, taken from the FEWSHOT_THREADS environment variable unless passed
explicitly, affects wall time only.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaincinv, ndtri

from . import _rng, bounds
from ._backend import backend
from .corrector import PROVENANCE_FEW, PROVENANCE_FROM_FEW  # noqa: F401
from .errors import ContractViolationError, DimensionMismatchError
from .geometry import Ball, cap_fraction_bound, cap_fraction_exact
from .samplers import (
    BallDistribution,
    Seed,
    UniformBall,
    certified_constants,
)

__all__ = [
    "EstimateWithCI",
    "EventResult",
    "TrialReport",
    "VERDICT_RESPECTED",
    "VERDICT_VACUOUS",
    "VERDICT_VIOLATED",
    "run_cap_check",
    "run_centering",
    "run_learn_few",
    "run_learn_from_few",
    "run_quasi_orthogonality",
    "sweep",
    "verdict_for",
    "wilson",
]

VERDICT_RESPECTED = "BoundRespected"
VERDICT_VIOLATED = "BoundViolated"
VERDICT_VACUOUS = "BoundVacuous"

MIN_TRIALS = 1000


@dataclass(frozen=True)
class EstimateWithCI:
    """Bernoulli estimate with a Wilson score interval."""

    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    confidence: float


def wilson(successes: int, trials: int, confidence: float = 0.99) -> EstimateWithCI:
    """Wilson score interval for a Bernoulli proportion.

    Args:
        successes: number of successes, 0 <= successes <= trials.
        trials: number of independent trials, >= 1.
        confidence: two-sided coverage target in (0, 1).
    """
    successes = int(successes)
    trials = int(trials)
    if trials < 1:
        raise ContractViolationError("trials must be >= 1")
    if not (0 <= successes <= trials):
        raise ContractViolationError("successes must lie in [0, trials]")
    confidence = float(confidence)
    if not (0.0 < confidence < 1.0):
        raise ContractViolationError("confidence must lie in (0, 1)")
    z = float(ndtri(0.5 + confidence / 2.0))
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
        / denom
    )
    # At the boundary counts the Wilson endpoints are exactly 0 and 1;
    # evaluate them as such rather than through the general expression,
    # which loses the last ulp and would break comparisons against an
    # exact bound of 1.0.
    ci_low = 0.0 if successes == 0 else max(0.0, center - half)
    ci_high = 1.0 if successes == trials else min(1.0, center + half)
    return EstimateWithCI(
        successes=successes,
        trials=trials,
        p_hat=p,
        ci_low=ci_low,
        ci_high=ci_high,
        confidence=confidence,
    )


def clopper_pearson(
    successes: int, trials: int, confidence: float = 0.99
) -> EstimateWithCI:
    """Exact (Clopper-Pearson) interval for a Bernoulli proportion.

    The score interval leans on a normal approximation that fails deep in
    the binomial tail, exactly where per-trial bound comparisons live: a
    single miss among a thousand draws must not outvote a bound of 1e-6.
    The beta-quantile endpoints are dual to the exact binomial tail test,
    so "interval entirely below the bound" keeps its advertised error rate
    at any count.
    """
    successes = int(successes)
    trials = int(trials)
    if trials < 1:
        raise ContractViolationError("trials must be >= 1")
    if not (0 <= successes <= trials):
        raise ContractViolationError("successes must lie in [0, trials]")
    confidence = float(confidence)
    if not (0.0 < confidence < 1.0):
        raise ContractViolationError("confidence must lie in (0, 1)")
    half_alpha = (1.0 - confidence) / 2.0
    if successes == 0:
        lo = 0.0
    else:
        lo = float(betaincinv(successes, trials - successes + 1, half_alpha))
    if successes == trials:
        hi = 1.0
    else:
        hi = float(betaincinv(successes + 1, trials - successes, 1.0 - half_alpha))
    return EstimateWithCI(
        successes=successes,
        trials=trials,
        p_hat=successes / trials,
        ci_low=lo,
        ci_high=hi,
        confidence=confidence,
    )


@dataclass(frozen=True)
class EventResult:
    """One certified event: estimate, optional bound, verdict.

    ``extras`` holds per-event report fields (e.g. the realized theta of a
    worst trial) that override the experiment-level parameters in emitted
    rows.
    """

    event: str
    estimate: EstimateWithCI
    bound: bounds.BoundValue | None = None
    verdict: str | None = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrialReport:
    """All certified events of one experiment configuration."""

    experiment: str
    params: dict
    events: tuple[EventResult, ...]
    summary: dict = field(default_factory=dict)

    def worst_verdict(self) -> str | None:
        """VERDICT_VIOLATED if any event was violated, else the mildest."""
        verdicts = [e.verdict for e in self.events if e.verdict is not None]
        if not verdicts:
            return None
        if VERDICT_VIOLATED in verdicts:
            return VERDICT_VIOLATED
        if VERDICT_VACUOUS in verdicts:
            return VERDICT_VACUOUS
        return VERDICT_RESPECTED


def verdict_for(
    estimate: EstimateWithCI, bound: bounds.BoundValue | None
) -> str | None:
    """Compare an estimate against a lower bound.

    Violation requires the whole interval below the clamped bound; a
    vacuous bound can never be violated.
    """
    if bound is None:
        return None
    if bound.vacuous:
        return VERDICT_VACUOUS
    if estimate.ci_high < bound.clamped:
        return VERDICT_VIOLATED
    return VERDICT_RESPECTED


def _resolve_threads(threads) -> int:
    if threads is None:
        raw = os.environ.get("FEWSHOT_THREADS", "").strip()
        if raw:
            try:
                threads = int(raw)
            except ValueError:
                raise ContractViolationError(
                    "FEWSHOT_THREADS must be an integer, got %r" % raw
                ) from None
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ContractViolationError("thread count must be >= 1")
    return threads


def _check_trials(trials: int) -> int:
    trials = int(trials)
    if trials < MIN_TRIALS:
        raise ContractViolationError("trials must be >= %d" % MIN_TRIALS)
    return trials


def _cluster_dist(
    n: int, dist: BallDistribution | None, v: float, shape
) -> BallDistribution:
    """Resolve the cluster distribution: an explicit object, or one built
    from scalar (v, shape) so sweeps over n can reconstruct it."""
    if dist is not None:
        if v != 1.0 or shape is not None:
            raise ContractViolationError("pass either dist or (v, shape), not both")
        if dist.dim != n:
            raise DimensionMismatchError("distribution dimension does not match n")
        return dist
    v = float(v)
    return BallDistribution(
        Ball(np.zeros(n), v), shape if shape is not None else UniformBall()
    )


def run_quasi_orthogonality(
    n: int,
    k: int,
    delta: float,
    eps: float,
    trials: int,
    seed: Seed,
    dist: BallDistribution | None = None,
    v: float = 1.0,
    shape=None,
    threads: int | None = None,
) -> TrialReport:
    """Certify the pairwise quasi-orthogonality bounds (events A1, A1&A2).

    Per trial, k points are drawn from the cluster distribution; A1 holds
    when all centered pairwise inner products stay within delta * v, A2
    when all centered norms reach (1 - eps) * v.
    """
    n = int(n)
    k = int(k)
    trials = _check_trials(trials)
    dist = _cluster_dist(n, dist, v, shape)
    threads = _resolve_threads(threads)
    c_new, rho = certified_constants(dist)
    v = dist.support.radius
    key_lo, key_hi = _rng.derive_key(seed.root, seed.stream, _rng.DOMAIN_QUASI_ORTH)
    a1, a12 = backend.quasi_orth_run(
        key_lo,
        key_hi,
        trials,
        n,
        k,
        dist.support.center,
        v,
        dist.radial_exponent(),
        float(delta),
        float(eps),
        threads,
    )
    est1 = wilson(int(np.count_nonzero(a1)), trials)
    est2 = wilson(int(np.count_nonzero(a12)), trials)
    b1 = bounds.lemma1_A1_bound(n, k, delta, rho=rho, v=v, c_new=c_new)
    b2 = bounds.lemma1_A1A2_bound(n, k, delta, eps, rho=rho, v=v, c_new=c_new)
    params = {
        "n": n,
        "k": k,
        "v": v,
        "rho": rho,
        "C_new": c_new,
        "delta": float(delta),
        "eps": float(eps),
    }
    events = (
        EventResult("A1", est1, b1, verdict_for(est1, b1)),
        EventResult("A1_and_A2", est2, b2, verdict_for(est2, b2)),
    )
    return TrialReport("quasi-orth", params, events)


def run_centering(
    n: int,
    k: int,
    delta: float,
    eps: float,
    trials: int,
    seed: Seed,
    dist: BallDistribution | None = None,
    v: float = 1.0,
    shape=None,
    threads: int | None = None,
) -> TrialReport:
    """Certify the empirical-mean concentration interval.

    Per trial the squared distance of the k-point mean from the support
    center is tested against [max(L, 0), U] (two-sided, A1&A2 bound) and
    against U alone (A1 bound).
    """
    n = int(n)
    k = int(k)
    trials = _check_trials(trials)
    dist = _cluster_dist(n, dist, v, shape)
    threads = _resolve_threads(threads)
    c_new, rho = certified_constants(dist)
    v = dist.support.radius
    key_lo, key_hi = _rng.derive_key(seed.root, seed.stream, _rng.DOMAIN_CENTERING)
    sq = backend.centering_run(
        key_lo,
        key_hi,
        trials,
        n,
        k,
        dist.support.center,
        v,
        dist.radial_exponent(),
        threads,
    )
    lower, upper = bounds.lemma2_interval(k, v, delta, eps)
    lo_clip = max(lower, 0.0)
    est_two = wilson(int(np.count_nonzero((sq >= lo_clip) & (sq <= upper))), trials)
    est_up = wilson(int(np.count_nonzero(sq <= upper)), trials)
    b_two, b_up = bounds.lemma2_prob_bounds(n, k, delta, eps, rho=rho, v=v, c_new=c_new)
    params = {
        "n": n,
        "k": k,
        "v": v,
        "rho": rho,
        "C_new": c_new,
        "delta": float(delta),
        "eps": float(eps),
    }
    events = (
        EventResult("cover_two_sided", est_two, b_two, verdict_for(est_two, b_two)),
        EventResult("cover_upper", est_up, b_up, verdict_for(est_up, b_up)),
    )
    return TrialReport("centering", params, events)


def _worst_trial(success_arr, per_trial: int, bound_values) -> tuple[int, EstimateWithCI]:
    """Index and estimate of the trial with the least CI headroom.

    Every trial is compared against its own bound and the verdict row
    carries the one with the smallest margin, so two corrections apply.
    The interval is exact (Clopper-Pearson) because per-trial counts are
    small while the bounds sit deep in the tail, and its confidence is
    raised to a family-wise 0.99 across all compared trials (Bonferroni);
    otherwise scanning thousands of trials at the per-trial level would
    flag a violation almost surely even when every trial's probability
    honours its bound.
    """
    count = len(success_arr)
    confidence = 1.0 - (1.0 - 0.99) / count
    half_alpha = (1.0 - confidence) / 2.0
    s = np.asarray(success_arr, dtype=np.float64)
    highs = np.ones(count, dtype=np.float64)
    open_mask = s < per_trial
    if np.any(open_mask):
        highs[open_mask] = betaincinv(
            s[open_mask] + 1.0, per_trial - s[open_mask], 1.0 - half_alpha
        )
    clamped = np.array([b.clamped for b in bound_values], dtype=np.float64)
    idx = int(np.argmin(highs - clamped))
    return idx, clopper_pearson(int(success_arr[idx]), per_trial, confidence)


def _pooled_bound(bound_values) -> bounds.BoundValue:
    """Mean of clamped per-trial bounds: valid since each trial's
    probability is >= its own clamped bound."""
    clamped = np.array([b.clamped for b in bound_values], dtype=np.float64)
    return bounds.BoundValue.from_raw(float(np.mean(clamped)))


def run_learn_few(
    n: int,
    k: int,
    trials: int,
    seed: Seed,
    fresh: int = 1000,
    new_dist: BallDistribution | None = None,
    v: float = 1.0,
    shape=None,
    base_shape=None,
    threads: int | None = None,
    with_details: bool = False,
):
    """Certify the memorizing patch construction.

    Per trial, k examples are drawn from the orthant-folded cluster
    distribution, the mean-direction patch is built, and ``fresh`` points
    from the base distribution (unit ball) are tested against it.  Events:

    * hypothesis_ok: the mean was nonzero and all projections nonnegative
      (no bound; the folding makes failures impossible in exact reals).
    * memorization: every training example fires, bound exactly 1.
    * agreement_pooled / agreement_worst_trial: fresh points that do NOT
      fire, against the per-trial realized-theta bound.
    """
    n = int(n)
    k = int(k)
    trials = _check_trials(trials)
    fresh = int(fresh)
    if fresh < 1:
        raise ContractViolationError("fresh must be >= 1")
    new_dist = _cluster_dist(n, new_dist, v, shape)
    if np.any(new_dist.support.center != 0.0):
        raise ContractViolationError(
            "orthant folding requires an origin-centered cluster distribution"
        )
    base_dist = BallDistribution(
        Ball(np.zeros(n), 1.0), base_shape if base_shape is not None else UniformBall()
    )
    threads = _resolve_threads(threads)
    c_new, rho = certified_constants(new_dist)
    c_x, r = certified_constants(base_dist)
    v = new_dist.support.radius
    key_lo, key_hi = _rng.derive_key(seed.root, seed.stream, _rng.DOMAIN_LEARN_FEW)
    built, theta, memo, fires = backend.learn_few_run(
        key_lo,
        key_hi,
        trials,
        n,
        k,
        fresh,
        v,
        new_dist.radial_exponent(),
        base_dist.radial_exponent(),
        threads,
    )
    mask = built.astype(bool)
    n_built = int(np.count_nonzero(mask))
    params = {
        "n": n,
        "k": k,
        "v": v,
        "rho": rho,
        "C_new": c_new,
        "r": r,
        "C_x": c_x,
    }
    events = []
    est_h = wilson(n_built, trials)
    events.append(EventResult("hypothesis_ok", est_h))
    if n_built > 0:
        est_m = wilson(int(np.count_nonzero(memo[mask])), n_built)
        b_m = bounds.BoundValue.from_raw(1.0)
        events.append(EventResult("memorization", est_m, b_m, verdict_for(est_m, b_m)))
        theta_b = theta[mask]
        agree = fresh - fires[mask]
        pe = [bounds.pe_bound(float(t), n, c_x=c_x, r=r) for t in theta_b]
        est_pool = wilson(int(agree.sum()), n_built * fresh)
        b_pool = _pooled_bound(pe)
        events.append(
            EventResult(
                "agreement_pooled", est_pool, b_pool, verdict_for(est_pool, b_pool)
            )
        )
        idx, est_w = _worst_trial(agree, fresh, pe)
        events.append(
            EventResult(
                "agreement_worst_trial",
                est_w,
                pe[idx],
                verdict_for(est_w, pe[idx]),
                extras={"theta": float(theta_b[idx])},
            )
        )
    report = TrialReport("learn-few", params, tuple(events))
    if with_details:
        return report, {"built": built, "theta": theta, "memo": memo, "fires": fires}
    return report


def run_learn_from_few(
    n: int,
    k: int,
    center,
    v: float,
    delta: float,
    theta_mix: float,
    trials: int,
    seed: Seed,
    fresh_new: int = 1000,
    fresh_base: int = 1000,
    new_shape=None,
    base_shape=None,
    threads: int | None = None,
    with_details: bool = False,
):
    """Certify the margin patch construction.

    Per trial, k examples are drawn from a cluster ball of radius v at the
    given center; when the margin D = ||mean|| - sqrt(U) is positive the
    patch threshold is placed at the theta_mix point of [max(D-v,0), D]
    and tested on fresh cluster points (capture) and fresh unit-ball base
    points (non-capture).  Events:

    * delta_positive: fraction of trials with D > 0 (no bound).
    * new_label_pooled / new_label_worst_trial: capture rate against the
      per-trial two-factor bound.
    * base_agreement_pooled / base_agreement_worst_trial: non-capture rate
      against the per-trial cap bound.
    """
    n = int(n)
    k = int(k)
    trials = _check_trials(trials)
    fresh_new = int(fresh_new)
    fresh_base = int(fresh_base)
    if fresh_new < 1 or fresh_base < 1:
        raise ContractViolationError("fresh counts must be >= 1")
    center = np.asarray(center, dtype=np.float64)
    if center.ndim == 0:
        # Scalar center: distance along the first axis, so sweeps over n
        # can keep a single parameter.
        c = np.zeros(n)
        c[0] = float(center)
        center = c
    elif center.shape != (n,):
        raise DimensionMismatchError("center must be a scalar or a length-n vector")
    v = float(v)
    delta = float(delta)
    theta_mix = float(theta_mix)
    if not (0.0 <= theta_mix <= 1.0):
        raise ContractViolationError("theta_mix must lie in [0, 1]")
    cluster = BallDistribution(
        Ball(center, v), new_shape if new_shape is not None else UniformBall()
    )
    base_dist = BallDistribution(
        Ball(np.zeros(n), 1.0), base_shape if base_shape is not None else UniformBall()
    )
    threads = _resolve_threads(threads)
    c_new, rho = certified_constants(cluster)
    c_x, r = certified_constants(base_dist)
    # Single source for sqrt(U): the same value the margin formula uses.
    upper_root = -bounds.delta_cap(0.0, k, v, delta)
    key_lo, key_hi = _rng.derive_key(
        seed.root, seed.stream, _rng.DOMAIN_LEARN_FROM_FEW
    )
    ok, dcap, theta, hits, keep = backend.learn_from_few_run(
        key_lo,
        key_hi,
        trials,
        n,
        k,
        fresh_new,
        fresh_base,
        center,
        v,
        cluster.radial_exponent(),
        base_dist.radial_exponent(),
        upper_root,
        theta_mix,
        threads,
    )
    mask = ok.astype(bool)
    n_ok = int(np.count_nonzero(mask))
    params = {
        "n": n,
        "k": k,
        "v": v,
        "rho": rho,
        "C_new": c_new,
        "r": r,
        "C_x": c_x,
        "delta": delta,
        "theta_mix": theta_mix,
    }
    events = [EventResult("delta_positive", wilson(n_ok, trials))]
    if n_ok > 0:
        theta_ok = theta[mask]
        dcap_ok = dcap[mask]
        pn = []
        pe = []
        for d, t in zip(dcap_ok, theta_ok):
            f_cap, f_pairs = bounds._theorem2_factors(
                n, k, v, delta, float(d), float(t), rho=rho, c_new=c_new
            )
            pn.append(bounds._combine_factors(f_cap, f_pairs))
            pe.append(bounds.pe_bound(float(t), n, c_x=c_x, r=r))
        hits_ok = hits[mask]
        keep_ok = keep[mask]
        est_np = wilson(int(hits_ok.sum()), n_ok * fresh_new)
        b_np = _pooled_bound(pn)
        events.append(
            EventResult("new_label_pooled", est_np, b_np, verdict_for(est_np, b_np))
        )
        idx, est_nw = _worst_trial(hits_ok, fresh_new, pn)
        events.append(
            EventResult(
                "new_label_worst_trial",
                est_nw,
                pn[idx],
                verdict_for(est_nw, pn[idx]),
                extras={"theta": float(theta_ok[idx])},
            )
        )
        est_bp = wilson(int(keep_ok.sum()), n_ok * fresh_base)
        b_bp = _pooled_bound(pe)
        events.append(
            EventResult(
                "base_agreement_pooled", est_bp, b_bp, verdict_for(est_bp, b_bp)
            )
        )
        idx_b, est_bw = _worst_trial(keep_ok, fresh_base, pe)
        events.append(
            EventResult(
                "base_agreement_worst_trial",
                est_bw,
                pe[idx_b],
                verdict_for(est_bw, pe[idx_b]),
                extras={"theta": float(theta_ok[idx_b])},
            )
        )
    report = TrialReport("learn-from-few", params, tuple(events))
    if with_details:
        return report, {
            "ok": ok,
            "delta_cap": dcap,
            "theta": theta,
            "new_hits": hits,
            "base_keep": keep,
        }
    return report


def run_cap_check(n_max: int = 30, grid: int = 101) -> TrialReport:
    """Check the cap bound against the exact cap fraction on a grid.

    For every n in 1..n_max and every a on a uniform [0, 1] grid,
    cap_fraction_exact(n, a) must not exceed cap_fraction_bound(n, a)
    beyond 1e-12.  One event per n; the summary records the largest
    exact/bound ratio seen.
    """
    n_max = int(n_max)
    grid = int(grid)
    if n_max < 1:
        raise ContractViolationError("n_max must be >= 1")
    if grid < 2:
        raise ContractViolationError("grid must be >= 2")
    offsets = np.linspace(0.0, 1.0, grid)
    max_ratio = 0.0
    events = []
    for n in range(1, n_max + 1):
        passes = 0
        for a in offsets:
            exact = cap_fraction_exact(n, float(a))
            bound = cap_fraction_bound(n, float(a))
            if exact <= bound + 1e-12:
                passes += 1
            if bound > 0.0:
                max_ratio = max(max_ratio, exact / bound)
        est = wilson(passes, grid)
        b = bounds.BoundValue.from_raw(1.0)
        events.append(
            EventResult(
                "cap_exact_le_bound", est, b, verdict_for(est, b), extras={"n": n}
            )
        )
    return TrialReport(
        "cap-check",
        {},
        tuple(events),
        summary={"max_ratio": max_ratio, "grid": grid, "n_max": n_max},
    )


_SWEEP_AXES = {
    "quasi-orth": {"n", "k", "delta", "eps"},
    "centering": {"n", "k", "delta", "eps"},
    "learn-few": {"n", "k"},
    "learn-from-few": {"n", "k", "v", "delta", "theta_mix"},
}

_SWEEP_RUNNERS = {
    "quasi-orth": run_quasi_orthogonality,
    "centering": run_centering,
    "learn-few": run_learn_few,
    "learn-from-few": run_learn_from_few,
}


def sweep(
    experiment: str,
    axis: str,
    values,
    trials: int,
    seed: Seed,
    params: dict | None = None,
    threads: int | None = None,
) -> list[TrialReport]:
    """Run one experiment along an axis of strictly increasing values.

    Value i runs on stream ``seed.stream + 1 + i`` so sweep points are
    independent of each other and of the base stream.
    """
    if experiment not in _SWEEP_RUNNERS:
        raise ContractViolationError("unknown experiment %r" % (experiment,))
    if axis not in _SWEEP_AXES[experiment]:
        raise ContractViolationError(
            "axis %r is not sweepable for %s" % (axis, experiment)
        )
    values = list(values)
    if not values:
        raise ContractViolationError("sweep needs at least one value")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ContractViolationError("sweep values must be strictly increasing")
    runner = _SWEEP_RUNNERS[experiment]
    fixed = dict(params or {})
    reports = []
    for i, value in enumerate(values):
        kwargs = dict(fixed)
        kwargs[axis] = value
        sub_seed = Seed(seed.root, (seed.stream + 1 + i) & (2**64 - 1))
        reports.append(runner(trials=trials, seed=sub_seed, threads=threads, **kwargs))
    return reports
