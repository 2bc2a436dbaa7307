"""Exception hierarchy. Parameter problems subclass ValueError so callers can catch broadly."""


class AlphapError(Exception):
    pass


class ParamError(AlphapError, ValueError):
    """Bad input; the CLI maps this to exit code 3."""


class NotClassNumberOne(ParamError):
    pass


class NotNegativeSquarefree(ParamError):
    pass


class DivisionByZero(ParamError, ZeroDivisionError):
    pass


class NotDivisible(AlphapError, ArithmeticError):
    pass


class PrecisionLoss(ParamError):
    pass


class ZeroElement(ParamError):
    pass


class BothZero(ParamError):
    pass


class BoundTooLarge(ParamError):
    pass


class PreconditionError(ParamError):
    pass


class AlphaLooksRational(AlphapError):
    pass


class ParamOutOfRange(ParamError):
    pass


class RangeEmpty(AlphapError):
    pass


class EqualArguments(ParamError):
    pass


class SupportUnbounded(ParamError):
    pass


class GNotVanishing(ParamError):
    pass


class NoApproximationFound(AlphapError):
    pass


class UnknownFormat(ParamError):
    pass
