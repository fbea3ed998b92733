"""Exception hierarchy shared by every layer of the package.

Each class carries an ``exit_code`` used by the command line front end.
"""

from __future__ import annotations


class WsaError(Exception):
    exit_code = 1


class WsaSyntaxError(WsaError):
    exit_code = 2

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class FormatError(WsaError):
    """Malformed database or representation file."""

    exit_code = 2


# typecheck-time failures
class TypecheckError(WsaError):
    exit_code = 3


class UnknownRelation(TypecheckError):
    pass


class UnknownAttribute(TypecheckError):
    pass


class SchemaMismatch(TypecheckError):
    pass


class SchemaCollision(TypecheckError):
    pass


class ArityMismatch(TypecheckError):
    pass


class UnboundVariable(TypecheckError):
    pass


class UnsupportedFeature(WsaError):
    exit_code = 3


class NonPrenex(WsaError):
    exit_code = 3


# resource limits
class LimitExceeded(WsaError):
    exit_code = 4


class EnumerationCap(LimitExceeded):
    pass


class WorldSetExplosion(LimitExceeded):
    pass


class TupleExplosion(LimitExceeded):
    pass


class DomainExplosion(LimitExceeded):
    pass


class TimeBudgetExceeded(LimitExceeded):
    pass


class SizeExplosion(LimitExceeded):
    pass


class Disagreement(WsaError):
    exit_code = 5
