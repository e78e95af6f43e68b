"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ApproxGroupError(Exception):
    """Base class for all library errors."""


class NumericalBreakdown(ApproxGroupError):
    pass


class DimensionMismatch(ApproxGroupError):
    pass


class KindMismatch(ApproxGroupError):
    pass


class RegimeMismatch(ApproxGroupError):
    pass


class NotUnitary(ApproxGroupError):
    pass


class CapExceeded(ApproxGroupError):
    """An intermediate set grew beyond the configured cap."""

    def __init__(self, partial_size: int, cap: int, partial=None):
        super().__init__(f"set size {partial_size} exceeds cap {cap}")
        self.partial_size = partial_size
        self.cap = cap
        self.partial = partial


class NotSymmetric(ApproxGroupError):
    pass


class MissingIdentity(ApproxGroupError):
    pass


class NotClosed(ApproxGroupError):
    pass


class ScalarInput(ApproxGroupError):
    pass


class DepthCapExceeded(ApproxGroupError):
    pass


class InvalidComposition(ApproxGroupError):
    pass


class TooSmall(ApproxGroupError):
    pass


class NoWitness(ApproxGroupError):
    pass


class EmptyNearIdentity(ApproxGroupError):
    pass


class NotExactMode(ApproxGroupError):
    pass


class NoProgress(ApproxGroupError):
    pass


class AlreadyDiagonal(NoProgress):
    """Every factor of the block subgroup is already abelian."""


class PipelineFailed(ApproxGroupError):
    def __init__(self, message: str, level: int):
        super().__init__(f"{message} (deepest level reached: {level})")
        self.level = level


class NonUnitaryConjugator(ApproxGroupError):
    pass


class NormalizerViolation(ApproxGroupError):
    def __init__(self, message: str, element=None):
        super().__init__(message)
        self.element = element


class DegenerateProfile(ApproxGroupError):
    pass


class InvalidSpec(ApproxGroupError):
    pass
