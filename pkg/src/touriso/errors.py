"""Exception hierarchy shared by every module."""


class TourisoError(Exception):
    """Base class for all package errors."""


class TournamentError(TourisoError, ValueError):
    pass


class MissingPair(TournamentError):
    pass


class DuplicatePair(TournamentError):
    pass


class SelfLoop(TournamentError):
    pass


class VertexOutOfRange(TournamentError, IndexError):
    pass


class EvenPartSize(TournamentError):
    pass


class SizeMismatch(TournamentError):
    pass


class TooFewColors(TournamentError):
    pass


class DegreeMismatch(TourisoError, ValueError):
    pass


class BadParameter(TourisoError, ValueError):
    pass


class ParseError(TourisoError, ValueError):
    pass


class NotIsomorphic(TourisoError):
    pass


class WitnessCheckFailed(TourisoError):
    """A claimed isomorphism failed verification; an oracle precondition was violated."""


class NotSymmetric(TourisoError):
    pass


class OracleInconsistent(TourisoError):
    pass


class RoundCapExceeded(TourisoError):
    pass


class SampleBudgetExceeded(TourisoError):
    pass


class CertificateInvalid(TourisoError):
    pass


class OracleProtocolError(TourisoError):
    pass


class RecursionLimit(TourisoError):
    """The automorphism recursion went deeper than the configured guard."""
