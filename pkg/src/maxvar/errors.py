"""Exception types shared across the package."""


class MaxvarError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInterval(MaxvarError):
    """An averaging interval collapsed to a point (y == x)."""


class NotSinglePeak(MaxvarError):
    """Input is not nondecreasing-then-nonincreasing with its peak at 0."""


class UnattainedSupremum(MaxvarError):
    """The maximal average is approached only as the interval grows unboundedly."""


class SolverFailure(MaxvarError):
    """A bracket or root could not be located within the iteration budget."""


class BreakpointContact(MaxvarError):
    """A derivative formula is inapplicable because the contact point (or x)
    sits on a kink of the input function."""


class InvalidExponent(MaxvarError):
    """q-variation requires q >= 1."""


class TooLarge(MaxvarError):
    """Input exceeds the size limit of an exhaustive routine."""


class EmptySet(MaxvarError):
    """An operation on interval sets received an empty set."""


class NotApplicable(MaxvarError):
    """A lemma check's preconditions do not hold for the given inputs."""


class ClassViolation(MaxvarError):
    """A function left the admissible class required by a check."""


class InvalidParams(MaxvarError):
    """Counterexample parameters violate their invariants."""


class PrecisionExceeded(MaxvarError):
    """Requested parameters produce intermediates outside the scalar's range."""
