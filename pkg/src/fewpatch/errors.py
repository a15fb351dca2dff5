"""Exception types raised by the library.

Every violated precondition raises one of these rather than producing a
silently wrong result.  All of them derive from ``FewpatchError`` so callers
can trap the whole family at once.
"""


class FewpatchError(Exception):
    """Base class for all library errors."""


class ContractViolationError(FewpatchError):
    """An argument fell outside its documented range."""


class DimensionMismatchError(FewpatchError):
    """Two vectors that must share a dimension do not."""


class ZeroMeanError(FewpatchError):
    """The empirical mean of the sample is the zero vector.

    A discriminant direction cannot be normalised from it.
    """


class HypothesisViolatedError(FewpatchError):
    """A sample point has negative inner product with the empirical mean.

    The one-shot construction requires (mean, x_i) >= 0 for every point.
    The offending indices are carried in :attr:`indices`.
    """

    def __init__(self, indices):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(
            "hypothesis (mean, x_i) >= 0 violated at indices %s" % (self.indices,)
        )


class DeltaNotPositiveError(FewpatchError):
    """The cluster margin ||mean|| - sqrt(U) is not positive.

    The few-shot construction has no admissible threshold in that case.
    Carries the offending ``norm_mean`` and ``upper_root`` values.
    """

    def __init__(self, norm_mean, upper_root):
        self.norm_mean = float(norm_mean)
        self.upper_root = float(upper_root)
        super().__init__(
            "margin ||mean|| - sqrt(U) = %.6g - %.6g is not positive"
            % (self.norm_mean, self.upper_root)
        )
