"""Hyperplane patches that graft a new label onto a frozen classifier.

A patch is a unit direction w and threshold theta; it fires on x exactly
when (w, x) >= theta.  A patched classifier answers the patch label
whenever the patch fires and defers to the wrapped base classifier
otherwise.  Construction never touches the base classifier's internals;
only latent vectors of the new examples are needed.

Two constructions are provided.  ``build_few_patch`` points w along the
empirical mean and drops the threshold to the smallest training
projection, so it memorizes the examples by construction.
``build_from_few_patch`` keeps only the certified margin of the mean over
the training cluster, which yields the generalization guarantees computed
in :mod:`fewpatch.bounds`.
"""

import json
from dataclasses import dataclass, field
from typing import Protocol, Union

import numpy as np

from .bounds import delta_cap
from .errors import (
    ContractViolationError,
    DeltaNotPositiveError,
    DimensionMismatchError,
    HypothesisViolatedError,
    ZeroMeanError,
)

__all__ = [
    "BaseClassifier",
    "ConstantLabel",
    "Label",
    "NearestCentroid",
    "PROVENANCE_FEW",
    "PROVENANCE_FROM_FEW",
    "Patch",
    "PatchedClassifier",
    "build_few_patch",
    "build_from_few_patch",
    "empirical_mean",
    "memorization_check",
    "patch_from_json",
    "patch_to_json",
]

Label = Union[str, int]

PROVENANCE_FEW = "FewExamples"
PROVENANCE_FROM_FEW = "FromFewExamples"


class BaseClassifier(Protocol):
    def classify(self, x) -> Label: ...


def _check_label(label) -> Label:
    if isinstance(label, bool) or not isinstance(label, (str, int)):
        raise ContractViolationError("label must be a string or an integer")
    return label


def _as_matrix(points) -> np.ndarray:
    a = np.asarray(points, dtype=np.float64)
    if a.ndim != 2:
        raise ContractViolationError("expected a (k, n) matrix of latents")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ContractViolationError("latent matrix must be nonempty")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError("latents have non-finite entries")
    return a


def _row_dot(w: np.ndarray, x: np.ndarray) -> float:
    # Single source of truth for projections: fires(), thresholds and
    # memorization checks must all round identically.
    return float(np.dot(w, x))


@dataclass(frozen=True)
class ConstantLabel:
    """Base classifier that answers one label everywhere."""

    label: Label

    def __post_init__(self):
        _check_label(self.label)

    def classify(self, x) -> Label:
        return self.label


class NearestCentroid:
    """Base classifier answering the label of the nearest centroid.

    Ties break toward the earliest centroid, so classification is a pure
    function of the input.
    """

    def __init__(self, centroids):
        items = list(centroids)
        if not items:
            raise ContractViolationError("need at least one centroid")
        vecs = []
        labels = []
        for vec, label in items:
            v = np.asarray(vec, dtype=np.float64)
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise ContractViolationError("centroid must be a finite 1-D vector")
            vecs.append(v)
            labels.append(_check_label(label))
        dims = {v.shape[0] for v in vecs}
        if len(dims) != 1:
            raise DimensionMismatchError("centroids disagree on dimension")
        self._matrix = np.vstack(vecs)
        self._labels = labels

    def classify(self, x) -> Label:
        vx = np.asarray(x, dtype=np.float64)
        if vx.shape != (self._matrix.shape[1],):
            raise DimensionMismatchError("input dimension does not match centroids")
        d2 = np.sum((self._matrix - vx) ** 2, axis=1)
        return self._labels[int(np.argmin(d2))]


@dataclass(frozen=True, eq=False)
class Patch:
    """Threshold patch: answer ``new_label`` iff (direction, x) >= theta."""

    direction: np.ndarray = field()
    theta: float
    new_label: Label
    provenance: str
    k: int
    v: float | None = None
    delta: float | None = None
    margin: float | None = None
    theta_lo: float | None = None
    theta_hi: float | None = None

    def __post_init__(self):
        w = np.asarray(self.direction, dtype=np.float64).copy()
        if w.ndim != 1 or w.size < 1 or not np.all(np.isfinite(w)):
            raise ContractViolationError("direction must be a finite 1-D vector")
        nm = float(np.sqrt(np.dot(w, w)))
        if abs(nm - 1.0) > 1e-9:
            raise ContractViolationError("direction must have unit norm")
        w.setflags(write=False)
        object.__setattr__(self, "direction", w)
        object.__setattr__(self, "theta", float(self.theta))
        _check_label(self.new_label)
        if self.provenance not in (PROVENANCE_FEW, PROVENANCE_FROM_FEW):
            raise ContractViolationError("unknown provenance %r" % (self.provenance,))
        if int(self.k) < 1:
            raise ContractViolationError("k must be >= 1")
        object.__setattr__(self, "k", int(self.k))

    @property
    def dim(self) -> int:
        return int(self.direction.shape[0])

    def fires(self, x) -> bool:
        vx = np.asarray(x, dtype=np.float64)
        if vx.shape != (self.dim,):
            raise DimensionMismatchError("input dimension does not match patch")
        return _row_dot(self.direction, vx) >= self.theta


class PatchedClassifier:
    """A base classifier with a stack of patches; later patches win."""

    def __init__(self, base: BaseClassifier, patches=()):
        self._base = base
        self._patches = tuple(patches)
        dims = {p.dim for p in self._patches}
        if len(dims) > 1:
            raise DimensionMismatchError("patches disagree on dimension")

    @property
    def base(self) -> BaseClassifier:
        return self._base

    @property
    def patches(self) -> tuple[Patch, ...]:
        return self._patches

    def with_patch(self, patch: Patch) -> "PatchedClassifier":
        return PatchedClassifier(self._base, self._patches + (patch,))

    def classify(self, x) -> Label:
        for patch in reversed(self._patches):
            if patch.fires(x):
                return patch.new_label
        return self._base.classify(x)


def empirical_mean(points) -> np.ndarray:
    """Mean of the rows of a (k, n) latent matrix."""
    a = _as_matrix(points)
    return a.mean(axis=0)


def build_few_patch(latents, new_label: Label) -> Patch:
    """Memorizing patch: w = mean direction, theta = min projection.

    Requires a nonzero mean and (w, x_i) >= 0 for every example; every
    training example then satisfies (w, x_i) >= theta by construction.
    """
    _check_label(new_label)
    a = _as_matrix(latents)
    mean = a.mean(axis=0)
    nm = float(np.sqrt(np.dot(mean, mean)))
    if nm == 0.0:
        raise ZeroMeanError("empirical mean of the examples is zero")
    w = mean / nm
    dots = [_row_dot(w, row) for row in a]
    bad = [i for i, d in enumerate(dots) if d < 0.0]
    if bad:
        raise HypothesisViolatedError(bad)
    return Patch(
        direction=w,
        theta=min(dots),
        new_label=new_label,
        provenance=PROVENANCE_FEW,
        k=int(a.shape[0]),
    )


def build_from_few_patch(
    latents,
    new_label: Label,
    v: float,
    delta: float,
    theta_mix: float = 0.5,
) -> Patch:
    """Margin patch from examples lying in some ball of radius v.

    The threshold is placed inside the admissible interval
    [max(D - v, 0), D], where D = ||mean|| - sqrt(U) is the certified
    margin, at the convex position selected by theta_mix (0 picks the low
    end, 1 picks D).  Raises DeltaNotPositiveError when D <= 0.
    """
    _check_label(new_label)
    a = _as_matrix(latents)
    v = float(v)
    if not (np.isfinite(v) and v > 0.0):
        raise ContractViolationError("v must be finite and > 0")
    theta_mix = float(theta_mix)
    if not (0.0 <= theta_mix <= 1.0):
        raise ContractViolationError("theta_mix must lie in [0, 1]")
    k = int(a.shape[0])
    if k > 1:
        # Points in a radius-v ball are pairwise at most 2v apart; reject
        # inputs that certifiably fit no such ball.
        gram_d2 = np.sum((a[:, None, :] - a[None, :, :]) ** 2, axis=2)
        if float(gram_d2.max()) > (2.0 * v * (1.0 + 1e-12)) ** 2:
            raise ContractViolationError(
                "examples are farther than 2v apart; no radius-v ball holds them"
            )
    mean = a.mean(axis=0)
    nm = float(np.sqrt(np.dot(mean, mean)))
    if nm == 0.0:
        raise ZeroMeanError("empirical mean of the examples is zero")
    d = delta_cap(nm, k, v, delta)
    if d <= 0.0:
        raise DeltaNotPositiveError(nm, nm - d)
    lo = max(d - v, 0.0)
    theta = (1.0 - theta_mix) * lo + theta_mix * d
    return Patch(
        direction=mean / nm,
        theta=theta,
        new_label=new_label,
        provenance=PROVENANCE_FROM_FEW,
        k=k,
        v=v,
        delta=float(delta),
        margin=d,
        theta_lo=lo,
        theta_hi=d,
    )


def memorization_check(patch: Patch, latents, tol: float = 0.0) -> bool:
    """True iff the patch fires on every row, up to an additive ``tol``.

    With the default tol = 0.0 the comparison is the exact one used by
    :meth:`Patch.fires`.
    """
    a = _as_matrix(latents)
    if a.shape[1] != patch.dim:
        raise DimensionMismatchError("latent dimension does not match patch")
    tol = float(tol)
    if tol < 0.0:
        raise ContractViolationError("tol must be >= 0")
    return all(_row_dot(patch.direction, row) >= patch.theta - tol for row in a)


def patch_to_json(patch: Patch) -> str:
    """Serialize a patch; floats survive the round trip exactly."""
    payload = {
        "kind": "patch",
        "dim": patch.dim,
        "direction": [float(x) for x in patch.direction],
        "theta": patch.theta,
        "new_label": patch.new_label,
        "provenance": patch.provenance,
        "params": {
            "k": patch.k,
            "v": patch.v,
            "delta": patch.delta,
            "margin": patch.margin,
            "theta_lo": patch.theta_lo,
            "theta_hi": patch.theta_hi,
        },
    }
    return json.dumps(payload)


def patch_from_json(text: str) -> Patch:
    """Inverse of :func:`patch_to_json`; validates the payload."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContractViolationError("invalid patch JSON: %s" % exc) from exc
    if not isinstance(payload, dict) or payload.get("kind") != "patch":
        raise ContractViolationError("not a serialized patch")
    direction = payload.get("direction")
    dim = payload.get("dim")
    if not isinstance(direction, list) or len(direction) != dim:
        raise ContractViolationError("direction does not match declared dim")
    params = payload.get("params") or {}
    try:
        opt = {
            key: (None if params.get(key) is None else float(params[key]))
            for key in ("v", "delta", "margin", "theta_lo", "theta_hi")
        }
        return Patch(
            direction=np.asarray(direction, dtype=np.float64),
            theta=payload.get("theta"),
            new_label=payload.get("new_label"),
            provenance=payload.get("provenance"),
            k=params.get("k", 1),
            **opt,
        )
    except (TypeError, ValueError) as exc:
        raise ContractViolationError("malformed patch payload: %s" % exc) from exc
