"""Exception hierarchy shared by all modules."""


class CumOrdError(Exception):
    """Base class for library errors."""


class InputError(CumOrdError, ValueError):
    """Malformed or out-of-range user input."""


class NotAdmissibleError(CumOrdError):
    """The pair (mu; q) does not define a member of the family."""


class WindowTooSmallError(CumOrdError):
    """A tabulated function is too short for the requested operation."""


class MomentBudgetError(CumOrdError):
    """A moment of the requested order is not finite for this model."""


class DegenerateRecurrenceError(CumOrdError):
    """A recurrence hit a vanishing leading factor."""


class ClassCError(CumOrdError):
    """The model is outside class C (delta > 0 with infinite support)."""


class UnreachableBranchError(CumOrdError):
    """Classification found no matching case; indicates an internal bug."""


class RankDeficiencyError(CumOrdError):
    """Gram-Schmidt met a numerically dependent vector."""


class OrderError(CumOrdError, ValueError):
    """Indices supplied in the wrong order or outside their range."""
