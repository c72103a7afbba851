"""Exception hierarchy shared by every module.

The command-line front end maps the three families below onto exit codes:
input problems exit with 1, size guards with 2 and invariant breaches with 3.
"""

from __future__ import annotations


class MCLLTError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(MCLLTError):
    """Malformed or unsuitable input (exit code 1)."""


class SizeGuardError(MCLLTError):
    """A computation was refused because it would be too large (exit code 2)."""


class InvariantBreach(MCLLTError):
    """A checked mathematical invariant failed (exit code 3).

    Parameters
    ----------
    invariant : str
        Short name of the invariant that failed.
    detail : str
        Human readable explanation with the offending numbers.
    """

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        msg = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(msg)


# ---------------------------------------------------------------- validation
class NonStochasticRow(ValidationError):
    def __init__(self, n: int, x, deviation: float):
        self.n, self.x, self.deviation = n, x, deviation
        super().__init__(f"kernel {n}, row {x!r}: row sum deviates from 1 by {deviation:.3e}")


class EmptyStateSet(ValidationError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"state set {n} is empty")


class NotTwoStepElliptic(ValidationError):
    def __init__(self, n: int, x, z):
        self.n, self.x, self.z = n, x, z
        super().__init__(f"zero two-step density from state {x!r} at time {n} to state {z!r} at time {n + 2}")


class ZeroBridgeMass(ValidationError):
    def __init__(self, n: int, x, z):
        self.n, self.x, self.z = n, x, z
        super().__init__(f"bridge from {x!r} at time {n} to {z!r} at time {n + 2} has zero mass")


class NotIntegerValued(ValidationError):
    pass


class OffLattice(ValidationError):
    pass


class NullConditioningEvent(ValidationError):
    pass


class DegenerateVariance(ValidationError):
    pass


class IntervalTooShort(ValidationError):
    pass


class NotSummable(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class NotReachable(ValidationError):
    pass


class NotStationary(ValidationError):
    pass


class NonUniformlyElliptic(ValidationError):
    pass


class InconclusiveAtHorizon(ValidationError):
    """The finite horizon is too short to decide a range question."""


class InconsistentPhases(ValidationError):
    """A cycle in the support graph carries a nonzero phase defect."""


# ---------------------------------------------------------------- size guards
class GridTooLarge(SizeGuardError):
    pass


class TooManyHexagons(SizeGuardError):
    def __init__(self, n: int, count: int):
        self.n, self.count = n, count
        super().__init__(f"position {n} has {count} hexagons, above the enumeration guard")
