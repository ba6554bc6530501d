"""Interpreter and runtime for an Actor-Reactor language.

Imperative actors and side-effect-free, termination-guarded reactors run
as isolated processes that communicate only through mailboxes and
arity-typed data streams.
"""

from .dag import Dag, compile_program
from .errors import (ArityError, ArlangError, ArlangRuntimeError, CompileError, LoadError,
                     ParseError, PureContextError, PurityViolation, TerminationViolation)
from .runtime import Program, Runtime, load, load_file, run_source
from .syntax import parse, parse_expr, tokenize

__version__ = "0.1.0"

__all__ = [
    "ArityError", "ArlangError", "ArlangRuntimeError", "CompileError", "Dag", "LoadError",
    "ParseError", "Program", "PureContextError", "PurityViolation", "Runtime",
    "TerminationViolation", "compile_program", "load", "load_file", "parse", "parse_expr",
    "run_source", "tokenize",
]
