"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (also a ``ValueError``),
numerical or environmental failures from :class:`ComputationError`. The CLI
maps the first family to exit code 1 and the second to exit code 2.
"""


class ComboKernelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ComboKernelError, ValueError):
    pass


class ComputationError(ComboKernelError, RuntimeError):
    pass


# core-model
class EmptyCombination(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


# sds
class WidthMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class MissingFingerprint(ValidationError, KeyError):
    def __init__(self, drug_id):
        super().__init__(drug_id)
        self.drug_id = drug_id

    def __str__(self):
        return f"no fingerprint for drug {self.drug_id!r}"


# lsap
class NonFiniteCost(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


# kernels / linalg
class OutOfRange(ValidationError):
    pass


class NotPositiveDefinite(ComputationError):
    pass


class FactorizationFailure(ComputationError):
    pass


class NoConvergence(ComputationError):
    pass


# svm
class ShapeMismatch(ValidationError):
    pass


class SingleClassTrainingSet(ValidationError):
    pass


class KernelNotPsd(ValidationError):
    pass


# stats
class UndefinedOdds(ValidationError):
    pass


class Overflow(ValidationError, OverflowError):
    pass


# dataset-builder / pipeline
class EmptyPartition(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    pass


class DegenerateFolds(ComputationError):
    pass


class IoFailure(ComputationError, OSError):
    pass
