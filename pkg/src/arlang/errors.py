"""Exception hierarchy.

Load-time errors (parse, purity, DAG compilation) map to exit code 1,
run-time errors to exit code 2.
"""

from __future__ import annotations


class ArlangError(Exception):
    """Base class. ``pos`` is a ``(line, column)`` pair when known."""

    kind = "error"

    def __init__(self, message: str, pos=None):
        super().__init__(message)
        self.message = message
        self.pos = pos

    def where(self) -> str:
        if self.pos is None:
            return ""
        return f" at {self.pos[0]}:{self.pos[1]}"

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}{self.where()}"


# -- load time ---------------------------------------------------------------

class LoadError(ArlangError):
    kind = "load-error"


class ParseError(LoadError):
    kind = "parse-error"


class PurityViolation(LoadError):
    """A forbidden special form inside a routine or reactor body."""

    kind = "purity-violation"

    def __init__(self, form: str, context: str, pos=None):
        super().__init__(f"'{form}' is not allowed in {context}", pos)
        self.form = form
        self.context = context


class CompileError(LoadError):
    kind = "compile-error"


# -- run time ----------------------------------------------------------------

class ArlangRuntimeError(ArlangError):
    """Raised while a process executes a turn.

    The runtime fills in ``process`` and ``selector`` on the way out of
    the turn so diagnostics can name them.
    """

    kind = "runtime-error"

    def __init__(self, message: str, pos=None, selector=None):
        super().__init__(message, pos)
        self.process = None
        self.selector = selector

    def __str__(self) -> str:
        parts = [f"{self.kind}: {self.message}"]
        if self.process is not None:
            parts.append(f"in process {self.process}")
        if self.selector is not None:
            parts.append(f"selector {self.selector}")
        return " ".join(parts) + self.where()


class TerminationViolation(ArlangRuntimeError):
    kind = "termination-violation"

    def __init__(self, class_name, selector, entering, ancestor, pos=None):
        super().__init__(
            f"{class_name}>>{selector} entered with sizes {fmt_sizes(entering)} "
            f"which do not descend below active call {fmt_sizes(ancestor)}",
            pos, selector)
        self.class_name = class_name
        self.entering = tuple(entering)
        self.ancestor = tuple(ancestor)


class PureContextError(ArlangRuntimeError):
    kind = "method-call-from-pure-context"


class ArityError(ArlangRuntimeError):
    kind = "arity-error"


class UnknownSelector(ArlangRuntimeError):
    kind = "unknown-selector"


class UnboundName(ArlangRuntimeError):
    kind = "unbound-identifier"


class ArlangTypeError(ArlangRuntimeError):
    kind = "type-error"


class StreamError(ArlangRuntimeError):
    kind = "stream-error"


class UnknownBehaviour(ArlangRuntimeError):
    kind = "unknown-behaviour"


def fmt_sizes(sizes) -> str:
    return "(" + " ".join(_fmt_num(s) for s in sizes) + ")"


def _fmt_num(x) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))
