"""Exception types raised across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Network/matching/state failed validation; ``issues`` lists every violation."""

    def __init__(self, issues):
        self.issues = list(issues)
        msg = "; ".join(f"{i.code.value}: {i.detail}" for i in self.issues)
        super().__init__(msg or "invalid input")


class UnmatchedNode(ValueError):
    pass


class EdgeNotFound(KeyError):
    pass


class SpecInvariantViolation(ValueError):
    pass


class SpecParseError(ValueError):
    pass


class PairSumViolation(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class SingularSystem(ArithmeticError):
    pass


class HorizonTooShort(RuntimeError):
    pass


class InsufficientDecay(ValueError):
    pass


class AtFixedPoint(ValueError):
    pass


class PeriodicNoConvergence(ArithmeticError):
    pass


class NotSymmetric(ValueError):
    pass


class FormatError(ValueError):
    """Malformed JSON document or file."""
