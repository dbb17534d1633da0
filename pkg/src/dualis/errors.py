"""Exception hierarchy shared by all dualis modules."""


class DualisError(Exception):
    """Base class for every error raised by dualis."""


class InvariantError(DualisError, ValueError):
    """A value failed the invariants of the type it was meant to build."""


class NonConvergence(DualisError, ArithmeticError):
    pass


class Overflow(DualisError, OverflowError):
    pass


class InvalidArity(DualisError, ValueError):
    pass


class DimMismatch(DualisError, ValueError):
    pass


class ScalingUndefined(DualisError, ValueError):
    pass


class ZeroOperandInMixture(DualisError, ValueError):
    pass


class NoUnitaryBlocks(DualisError, ValueError):
    pass


class NonRealRoot(DualisError, ArithmeticError):
    pass


class DimIncompatible(DualisError, ValueError):
    pass


class WrongScaling(DualisError, ValueError):
    pass


class InvalidDistribution(DualisError, ValueError):
    pass


class NegativeScaling(DualisError, ValueError):
    pass


class RankMismatch(DualisError, ValueError):
    pass


class UnencodedState(DualisError, ValueError):
    pass


class TooLarge(DualisError, ValueError):
    pass


class DomainError(DualisError, ValueError):
    pass


class SingularState(DualisError, ValueError):
    pass


class RegimeViolation(DualisError, ValueError):
    pass
