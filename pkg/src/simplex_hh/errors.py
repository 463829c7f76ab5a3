"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`SimplexHHError`, which is itself a :class:`ValueError` so that
callers treating bad input generically keep working.
"""


class SimplexHHError(ValueError):
    """Base class for library errors."""


class DimensionMismatch(SimplexHHError):
    pass


class DegenerateSimplex(SimplexHHError):
    """Edge vectors are (numerically) linearly dependent."""


class DegenerateFace(DegenerateSimplex):
    pass


class IndexOutOfRange(SimplexHHError, IndexError):
    pass


class NotFullDimensional(SimplexHHError):
    pass


class EvaluationOverflow(SimplexHHError, ArithmeticError):
    """A function value was not finite."""


class NotPolynomial(SimplexHHError, TypeError):
    pass


class UnsupportedDegree(SimplexHHError):
    pass


class GroundSetTooLarge(SimplexHHError):
    pass


class GroundSetMismatch(SimplexHHError):
    pass


class NotADivisor(SimplexHHError):
    pass


class NotARefinement(SimplexHHError):
    pass


class WrongCount(SimplexHHError):
    pass


class SchemaError(SimplexHHError):
    """Malformed JSON input for a simplex or function."""
