"""Exception hierarchy shared by every slep module."""

from __future__ import annotations


class SlepError(Exception):
    """Base class for all library errors."""


class ValidationError(SlepError, ValueError):
    """A problem statement violates one or more invariants.

    ``violations`` is a list of ``(code, message)`` pairs; every violated
    invariant is reported, not only the first one found.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(f"{code}: {msg}" for code, msg in self.violations)
        super().__init__(text)

    @property
    def codes(self):
        return [code for code, _ in self.violations]


# -- expression parsing -------------------------------------------------------


class PotentialSyntaxError(SlepError, ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class UnknownIdentifier(SlepError, ValueError):
    pass


class ArityError(SlepError, ValueError):
    pass


class DomainError(SlepError, ValueError):
    pass


# -- numerics -------------------------------------------------------------------


class NumericalError(SlepError, ArithmeticError):
    """Base class for failures of the numerical pipeline (CLI exit status 3)."""


class NonFinite(NumericalError):
    def __init__(self, message, x=None):
        self.x = x
        super().__init__(message if x is None else f"{message} at x={x:.6g}")


class CountShortfall(NumericalError):
    def __init__(self, requested, found):
        self.requested = requested
        self.found = found
        super().__init__(f"requested {requested} eigenvalues, found {found} in the scan window")


class ClusterUnresolved(NumericalError):
    pass


class WindingAmbiguous(NumericalError):
    pass


class CaseContradiction(NumericalError):
    pass


class ResidualTooLarge(NumericalError):
    def __init__(self, condition, residual, bound):
        self.condition = condition
        self.residual = residual
        self.bound = bound
        super().__init__(f"boundary relation {condition!r} residual {residual:.3e} exceeds {bound:.3e}")


class BranchUndefined(NumericalError):
    pass


class MissingConstant(SlepError, LookupError):
    pass


class GridMismatch(SlepError, ValueError):
    pass


class DenominatorNearZero(NumericalError):
    def __init__(self, name, value):
        self.name = name
        self.value = value
        super().__init__(f"denominator {name} = {value!r} is numerically zero")


class NotABasis(SlepError):
    pass


class RemovedIndexOutOfRange(SlepError, IndexError):
    pass


class NoData(SlepError, OSError):
    pass
