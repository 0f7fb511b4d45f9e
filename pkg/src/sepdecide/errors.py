"""Exception hierarchy shared by every stage of the decision engine."""


class SepDecideError(Exception):
    """Base class for all errors raised by this package."""


class StateError(SepDecideError, ValueError):
    pass


class DimensionMismatch(StateError):
    pass


class NotHermitian(StateError):
    pass


class NotPSD(StateError):
    pass


class TraceNotOne(StateError):
    pass


class EmptyDecomposition(StateError):
    pass


class NotIsometry(SepDecideError, ValueError):
    pass


class NotPure(SepDecideError, ValueError):
    pass


class RankOutOfRange(SepDecideError, ValueError):
    pass


class DegreeOverflow(SepDecideError):
    """No XL degree up to the configured maximum satisfies the counting bound."""


class SizeOverflow(SepDecideError):
    """The expanded linear system would exceed the memory budget."""


class ZeroPolynomial(SepDecideError, ValueError):
    pass


class CertificateCheckFailed(SepDecideError):
    pass
