"""Exception hierarchy shared by all modules."""


class SchattenError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SchattenError, ValueError):
    pass


class NotHermitian(SchattenError, ValueError):
    pass


class ConvergenceFailure(SchattenError, RuntimeError):
    pass


class InvalidP(SchattenError, ValueError):
    pass


class SmoothnessViolation(SchattenError, ValueError):
    """A confluent node cluster sits on a point where f is not smooth enough."""


class Overflow(SchattenError, ArithmeticError):
    pass


class SignMismatch(SchattenError, ValueError):
    pass


class ZeroEigenvalue(SchattenError, ValueError):
    pass


class DegenerateSpectrum(SchattenError, ValueError):
    pass


class NotPsd(SchattenError, ValueError):
    pass


class SignCondition(SchattenError, ValueError):
    pass


class SingularityTooClose(SchattenError, ValueError):
    pass


class SingularB(SchattenError, ValueError):
    pass


class NullSpaceFailure(SchattenError, RuntimeError):
    pass


class TooCloseToSingularPoint(SchattenError, ValueError):
    pass


class NegativeResidualMass(SchattenError, RuntimeError):
    pass


class EmptyMeasure(SchattenError, ValueError):
    pass


class ParseError(SchattenError, ValueError):
    pass
