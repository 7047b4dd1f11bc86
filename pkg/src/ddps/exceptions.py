"""Exception hierarchy shared by every stage of the solver."""


class DDPSError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DDPSError, ValueError):
    """Malformed Matrix Market header or body."""


class UnsupportedField(ParseError):
    """Matrix Market field we do not handle (complex, pattern, integer-less)."""


class DimensionMismatch(DDPSError, ValueError):
    pass


class NotSquare(DimensionMismatch):
    pass


class InvalidPartCount(DDPSError, ValueError):
    pass


class BadPartVector(DDPSError, ValueError):
    """Part-id file is the wrong length, out of range, or skips an id."""


class SingularBlock(DDPSError, ArithmeticError):
    """A diagonal block could not be factorized.

    Parameters
    ----------
    block : int
        Zero-based index of the offending partition.
    """

    def __init__(self, block, message=None):
        self.block = block
        super().__init__(message or f"diagonal block {block} is singular")


class ReducedSingular(DDPSError, ArithmeticError):
    pass
