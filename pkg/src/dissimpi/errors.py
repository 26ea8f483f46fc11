"""Exception types raised across the package."""


class DissimError(Exception):
    """Base class for all package errors."""


class DegeneratePointSet(DissimError, ValueError):
    """Stored points do not affinely span the space (or are otherwise invalid)."""


class DimensionMismatch(DissimError, ValueError):
    pass


class SingularMatrix(DissimError, ArithmeticError):
    pass


class NonConvergence(DissimError, RuntimeError):
    pass


class DegenerateRange(DissimError, ValueError):
    """A range with max == min was given where a positive width is required."""


class InvalidBracket(DissimError, ValueError):
    pass


class RankDeficient(DissimError, ValueError):
    pass


class TooShort(DissimError, ValueError):
    pass


class InsufficientData(DissimError, ValueError):
    pass


class NonFinite(DissimError, ArithmeticError):
    pass
