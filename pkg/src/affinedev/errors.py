"""Exception hierarchy shared by all modules."""


class AffineDevError(Exception):
    """Base class for every error raised by this package."""


class DevelopmentFormatError(AffineDevError):
    """Malformed development document (syntax or dangling reference)."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownVertex(AffineDevError, KeyError):
    pass


class NotCofacial(AffineDevError):
    pass


class InconsistentDistance(AffineDevError):
    pass


class NotCombinatoriallyEquivalent(AffineDevError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotClosed(AffineDevError):
    pass


class TooFewFaces(AffineDevError):
    pass


class NotASuspension(AffineDevError):
    pass


class NegativeSquaredVolume(AffineDevError):
    pass


class DegenerateBase(AffineDevError):
    pass


class RankDeficient(AffineDevError):
    pass


class Unrealizable(AffineDevError):
    """A valency-3 patch whose Cayley-Menger value is not positive."""


class NonPlanarFace(AffineDevError):
    pass


class DegenerateMap(AffineDevError):
    pass


class InvalidParams(AffineDevError, ValueError):
    pass
