"""Exception hierarchy shared across the package."""


class RoutingError(Exception):
    """Base class for all errors raised by hybridroute."""


class UnknownToken(RoutingError, KeyError):
    pass


class NonPositiveReserve(RoutingError, ValueError):
    pass


class InvalidAmount(RoutingError, ValueError):
    pass


class NumericalFailure(RoutingError, ArithmeticError):
    """An iterative solver failed to converge."""


class DuplicatePoolId(RoutingError, ValueError):
    pass


class SrcEqualsDst(RoutingError, ValueError):
    pass


class NoPathExists(RoutingError):
    pass


class NoFeasiblePath(RoutingError):
    pass


class InfeasiblePath(RoutingError, ValueError):
    pass


class UnknownVenue(RoutingError, KeyError):
    pass


class InvalidVector(RoutingError, ValueError):
    pass


class NegativeTheta(RoutingError, ValueError):
    pass


class InvalidStratum(RoutingError, ValueError):
    pass


class TooFewSamples(RoutingError, ValueError):
    pass


class EmptyInput(RoutingError, ValueError):
    pass


class InvalidConfig(RoutingError, ValueError):
    pass
