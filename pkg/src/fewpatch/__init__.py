"""Few-shot classifier patches with Monte Carlo certified guarantees.

The library builds hyperplane patches (a unit direction and a threshold)
from a handful of latent vectors, wraps them around a frozen base
classifier, and certifies the closed-form probability bounds that govern
them by seeded simulation.
"""

from ._backend import backend_name
from .bounds import (
    BoundInputs,
    BoundValue,
    Theorem2Bounds,
    delta_cap,
    lemma1_A1_bound,
    lemma1_A1A2_bound,
    lemma2_interval,
    lemma2_prob_bounds,
    pe_bound,
    theorem2_bounds,
)
from .corrector import (
    ConstantLabel,
    NearestCentroid,
    Patch,
    PatchedClassifier,
    build_few_patch,
    build_from_few_patch,
    empirical_mean,
    memorization_check,
    patch_from_json,
    patch_to_json,
)
from .errors import (
    ContractViolationError,
    DeltaNotPositiveError,
    DimensionMismatchError,
    FewpatchError,
    HypothesisViolatedError,
    ZeroMeanError,
)
from .experiments import (
    EstimateWithCI,
    EventResult,
    TrialReport,
    clopper_pearson,
    run_cap_check,
    run_centering,
    run_learn_few,
    run_learn_from_few,
    run_quasi_orthogonality,
    sweep,
    wilson,
)
from .geometry import (
    Ball,
    ball_contains,
    cap_fraction_bound,
    cap_fraction_exact,
    dot,
    norm,
    normalize,
)
from .samplers import (
    BallDistribution,
    RadialPower,
    Seed,
    UniformBall,
    certified_constants,
    sample,
    sample_uniform,
    sample_unit_sphere,
    sample_unit_sphere_direction,
)

__version__ = "0.1.0"
