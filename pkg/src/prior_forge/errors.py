"""Exception hierarchy for prior-forge.

Every error raised by the library derives from :class:`PriorForgeError`,
so callers (CLI, HTTP service) can catch one base class and map the
subclass name onto a wire-level error code.
"""


class PriorForgeError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# Partitions and sample spaces


class PartitionError(PriorForgeError):
    pass


class OverlappingBins(PartitionError):
    def __init__(self, i, j, message=None):
        self.pair = (i, j)
        super().__init__(message or f"bins {i} and {j} overlap")


class CoverageGap(PartitionError):
    def __init__(self, gap, message=None):
        self.gap = gap
        super().__init__(message or f"partition does not cover {gap}")


class DimensionMismatch(PriorForgeError):
    pass


# ---------------------------------------------------------------------------
# Probabilities and models


class NonFiniteCDF(PriorForgeError):
    pass


class NonPositiveVariance(PriorForgeError):
    pass


class JacobianUnavailable(PriorForgeError):
    pass


class MCBudgetExceeded(PriorForgeError):
    pass


class NoPivotalMap(PriorForgeError):
    pass


class NonFiniteDraw(PriorForgeError):
    pass


# ---------------------------------------------------------------------------
# Judgements and likelihood


class NotOnSimplex(PriorForgeError):
    pass


class NonPositiveAlpha(PriorForgeError):
    pass


class LengthMismatch(PriorForgeError):
    pass


class DegenerateJudgement(PriorForgeError):
    pass


class NonInteriorP(PriorForgeError):
    pass


# ---------------------------------------------------------------------------
# Optimization


class SingularFisher(PriorForgeError):
    pass


class MaxIterExceeded(PriorForgeError):
    pass


class OptimizerFailure(PriorForgeError):
    pass


# ---------------------------------------------------------------------------
# Service / sessions


class UnknownModel(PriorForgeError):
    pass


class InvalidPartition(PriorForgeError):
    pass


class SessionNotFound(PriorForgeError):
    pass


class NonIncreasingThresholds(PriorForgeError):
    pass


class AllZeroChips(PriorForgeError):
    pass


class NotFitted(PriorForgeError):
    pass
