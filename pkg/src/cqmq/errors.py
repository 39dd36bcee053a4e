"""Exception hierarchy shared by every cqmq module."""


class CQMError(Exception):
    """Base class for all cqmq errors."""


class ExpressionSyntaxError(CQMError, ValueError):
    """Malformed expression source.

    Attributes
    ----------
    offset : int
        Byte offset into the UTF-8 source where parsing failed.
    expected : frozenset of str
        Token kinds that would have been accepted at ``offset``.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at offset {offset}" + (f" (expected {exp})" if exp else ""))


class UnknownIdentifier(CQMError, ValueError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class DomainError(CQMError, ArithmeticError):
    """Evaluation hit a singularity or left a function's real domain."""


class NotPositiveDefinite(CQMError, ArithmeticError):
    pass


class NotSpecial(CQMError):
    """A bracket result failed the special-phase-function shape check."""


class GridTooCoarse(CQMError):
    pass


class NoConvergence(CQMError):
    """Iteration cap reached; ``partial`` holds whatever was converged."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(CQMError, ValueError):
    pass
