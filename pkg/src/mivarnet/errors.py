"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class MivarError(Exception):
    """Base class for all errors raised by mivarnet."""


# --- net construction -------------------------------------------------------


class NetError(MivarError, ValueError):
    """A rule or parameter list violates a structural invariant."""


class DuplicateId(NetError):
    pass


class UnknownParamRef(NetError):
    pass


class SelfLoop(NetError):
    pass


class EmptyIO(NetError):
    pass


class DuplicateRef(NetError):
    """The same parameter is listed twice among a rule's inputs or outputs."""


class ExprVarNotDeclared(NetError):
    pass


class ExprCountMismatch(NetError):
    """A rule does not carry exactly one expression per output."""


# --- expressions ------------------------------------------------------------


class ParseError(MivarError, ValueError):
    def __init__(self, text: str, offset: int, expected: str):
        self.text = text
        self.offset = offset
        self.expected = expected
        super().__init__(f"expected {expected} at byte {offset} in {text!r}")


class EvalError(MivarError, ArithmeticError):
    """Numeric evaluation failed.

    ``rule_id`` and ``output_id`` are filled in when the failure happens while
    executing a solution path.
    """

    def __init__(self, message: str, rule_id: str | None = None, output_id: str | None = None):
        self.message = message
        self.rule_id = rule_id
        self.output_id = output_id
        where = f" (rule {rule_id}, output {output_id})" if rule_id is not None else ""
        super().__init__(message + where)

    def located(self, rule_id: str, output_id: str) -> EvalError:
        return type(self)(self.message, rule_id, output_id)


class UnboundVariable(EvalError):
    pass


class DivisionByZero(EvalError, ZeroDivisionError):
    pass


class NonFiniteResult(EvalError):
    pass


# --- inference --------------------------------------------------------------


class QueryError(MivarError, ValueError):
    pass


class UnknownId(QueryError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NotFireable(MivarError, RuntimeError):
    pass


class MissingData(MivarError):
    """No firing sequence reaches every required parameter.

    ``unreached_targets`` are the required ids still unknown when the engine
    blocked; ``frontier`` lists the rules relevant to those targets that never
    became fireable.
    """

    def __init__(self, unreached_targets, frontier=()):
        self.unreached_targets = frozenset(unreached_targets)
        self.frontier = frozenset(frontier)
        if not self.unreached_targets:
            raise ValueError("MissingData needs at least one unreached target")
        super().__init__("unreached: " + ", ".join(sorted(self.unreached_targets, key=_natural_key)))


class TraceTooLarge(MivarError, ValueError):
    pass


# --- io / bench -------------------------------------------------------------


class KbError(MivarError, ValueError):
    pass


class XmlError(KbError):
    pass


class SchemaError(KbError):
    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InsufficientData(MivarError, ValueError):
    pass


def _natural_key(ident: str):
    """Sort key that orders ``P2`` before ``P10``."""
    head = ident.rstrip("0123456789")
    tail = ident[len(head):]
    return (head, int(tail) if tail else -1, ident)
