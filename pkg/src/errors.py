"""
Exception hierarchy for the covert slot toolkit.

Errors derive from ``Exception`` rather than ``ValueError`` so that raising
them inside pydantic validators surfaces the domain error unchanged.
"""


class CovertSlotError(Exception):
    """Base exception for all toolkit errors"""

    pass


class AlphabetMismatch(CovertSlotError):
    """Two distributions are defined over alphabets of different size"""


class AbsoluteContinuityViolation(CovertSlotError):
    """A distribution puts mass where the reference has none"""


class NormalizationError(CovertSlotError):
    """Probability vector is negative, too short or does not sum to one"""


class OutOfRangeAlpha(CovertSlotError):
    """Mixture weight outside [0, 1]"""


class NonPositiveVariance(CovertSlotError):
    """Gaussian variance must be strictly positive"""


class NonPositiveArgument(CovertSlotError):
    """Tail bound evaluated at a non-positive argument"""


class RangeViolation(CovertSlotError):
    """Argument outside the validity range of a bound"""


class CovertnessInfeasible(CovertSlotError):
    """No input bias or power satisfies the covertness budget for this (n, L, delta)"""


class KeylessConditionViolated(CovertSlotError):
    """Bob's channel is not better than Willie's, so keyless covert coding is impossible"""


class TooLargeToEnumerate(CovertSlotError):
    """Exact enumeration would exceed the configured table size"""


class KeyMismatch(CovertSlotError):
    """Enumerated tables are indexed over different sequence spaces"""


class NonPositiveTrials(CovertSlotError):
    """Monte Carlo estimator called with no trials"""


class InsufficientTrials(NonPositiveTrials):
    """Monte Carlo estimator called with fewer trials than it requires"""


class InvalidParameters(CovertSlotError):
    """Codebook or scenario parameters outside their admissible range"""


class SlotOutOfRange(CovertSlotError):
    """Slot index outside [1, L]"""


class LengthMismatch(CovertSlotError):
    """Received sequence length does not match n * L"""


class CostCapExceeded(CovertSlotError):
    """Requested Monte Carlo run exceeds the work cap"""


class CodebookFormatError(CovertSlotError):
    """Serialized codebook is malformed"""


class ConfigurationError(CovertSlotError):
    """Experiment manifest or runtime settings are invalid"""
