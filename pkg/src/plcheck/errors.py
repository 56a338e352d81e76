"""Exception hierarchy shared by all modules."""


class PLCheckError(Exception):
    """Base class for every error raised by the package."""


class NotHermitian(PLCheckError):
    pass


class NotPositiveDefinite(PLCheckError):
    pass


class NotUnitary(PLCheckError):
    pass


class NotCartan(PLCheckError):
    pass


class NotInSG(PLCheckError):
    """Matrix is not Hermitian positive-definite with unit determinant."""


class DimensionMismatch(PLCheckError):
    pass


class EvaluationFailed(PLCheckError):
    """A probe of a user supplied map raised or returned non-finite data."""


class NonFinite(PLCheckError):
    pass


class ParamOutOfRange(PLCheckError):
    pass


class SingularDecomposition(PLCheckError):
    pass


class DecompositionFailed(PLCheckError):
    pass


class DegenerateRepresentation(PLCheckError):
    pass


class IllConditioned(PLCheckError):
    pass


class StepSizeUnderflow(PLCheckError):
    pass


class Inconsistent(PLCheckError):
    pass


class ConfigInvalid(PLCheckError):
    pass
