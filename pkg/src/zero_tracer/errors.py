"""Exception hierarchy shared by all modules."""


class ZeroTracerError(Exception):
    """Base class for every error raised by this package."""


class InvalidMesh(ZeroTracerError, ValueError):
    pass


class LevelTooLarge(ZeroTracerError, ValueError):
    pass


class NotARotation(ZeroTracerError, ValueError):
    pass


class DegenerateField(ZeroTracerError):
    """The field vanishes at mesh vertices no matter how the mesh is rotated."""


class InvalidLabelling(ZeroTracerError, ValueError):
    pass


class TheoremViolation(ZeroTracerError):
    """The traced zero set does not have the guaranteed parity structure.

    Unreachable for valid inputs; seeing it means a bug or a corrupt mesh.
    """


class NoShiftStructure(ZeroTracerError):
    pass


class NotOdd(ZeroTracerError, ValueError):
    pass


class NoConvergence(ZeroTracerError):
    pass


class PairSearchFailed(ZeroTracerError):
    pass


class ROutOfRange(ZeroTracerError, ValueError):
    pass


class ThetaOutOfRange(ZeroTracerError, ValueError):
    pass


class ExprSyntaxError(ZeroTracerError, SyntaxError):
    """Malformed field expression; ``offset`` is a 0-based byte offset."""

    def __init__(self, msg, offset):
        super().__init__(f"{msg} at offset {offset}")
        self.msg = msg
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    pass


class EvaluationError(ZeroTracerError, ArithmeticError):
    pass
