"""Tokenizer, parser, printer and load-time purity check for ``.arl`` programs."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParseError, PurityViolation
from .values import UNDEFINED, ClassDef, MemberDef, Symbol

# -- tokens ------------------------------------------------------------------

OPEN, CLOSE = "open-paren", "close-paren"
NUMBER, STRING, SYMBOL = "number", "string-literal", "symbol-literal"
IDENT, QUALIFIED, HASH = "identifier", "qualified-identifier", "hash-constant"

HASH_CONSTANTS = ("#true", "#false", "#undefined", "#self", "#Pi")

_NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")
_IDENT_RE = re.compile(r"[A-Za-z0-9!$%&*+\-/:<=>?^_~@]+\Z")
_DELIMS = set("()\"';") | set(" \t\r\n\f\v")


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    pos: tuple  # (line, column), both 1-based

    def __repr__(self):
        return f"Token({self.kind}, {self.lexeme!r})"


def _is_ident(text: str) -> bool:
    return bool(_IDENT_RE.match(text)) and not _NUMBER_RE.match(text)


def tokenize(source: str) -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k=1):
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        pos = (line, col)
        if c.isspace():
            advance()
        elif c == "/" and source.startswith("//", i):
            while i < n and source[i] != "\n":
                advance()
        elif c == "(":
            tokens.append(Token(OPEN, c, pos))
            advance()
        elif c == ")":
            tokens.append(Token(CLOSE, c, pos))
            advance()
        elif c == '"':
            advance()
            chars = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string literal", pos)
                c = source[i]
                if c == '"':
                    advance()
                    break
                if c == "\\":
                    if i + 1 < n and source[i + 1] in '"\\':
                        chars.append(source[i + 1])
                        advance(2)
                        continue
                    raise ParseError("unsupported escape in string literal", (line, col))
                chars.append(c)
                advance()
            tokens.append(Token(STRING, "".join(chars), pos))
        else:
            quoted = c == "'"
            if quoted:
                advance()
            start = i
            while i < n and source[i] not in _DELIMS:
                advance()
            text = source[start:i]
            if quoted:
                if not _is_ident(text):
                    raise ParseError(f"illegal symbol literal '{text}", pos)
                tokens.append(Token(SYMBOL, text, pos))
            elif not text:
                raise ParseError(f"illegal character {c!r}", pos)
            else:
                tokens.append(Token(_classify_atom(text, pos), text, pos))
    return tokens


def _classify_atom(text: str, pos) -> str:
    if text.startswith("#"):
        if text in HASH_CONSTANTS:
            return HASH
        raise ParseError(f"unknown hash constant {text}", pos)
    if _NUMBER_RE.match(text):
        return NUMBER
    if "." in text:
        parts = text.split(".")
        if len(parts) == 2 and all(_is_ident(p) for p in parts):
            return QUALIFIED
        raise ParseError(f"malformed qualification {text!r}", pos)
    if _is_ident(text):
        return IDENT
    bad = next(ch for ch in text if not _IDENT_RE.match(ch))
    raise ParseError(f"illegal character {bad!r}", pos)


# -- expressions -------------------------------------------------------------

@dataclass
class Expr:
    pos: tuple = field(default=None, compare=False, repr=False, kw_only=True)

    def children(self):
        return []


@dataclass
class Literal(Expr):
    value: object


@dataclass
class Var(Expr):
    name: str


@dataclass
class SelfRef(Expr):
    pass


@dataclass
class Qualification(Expr):
    owner: str
    stream: str


@dataclass
class Def(Expr):
    name: str
    value: Expr

    def children(self):
        return [self.value]


@dataclass
class DefValues(Expr):
    names: list
    value: Expr

    def children(self):
        return [self.value]


@dataclass
class SetBang(Expr):
    name: str
    value: Expr

    def children(self):
        return [self.value]


@dataclass
class If(Expr):
    test: Expr
    then: Expr
    orelse: Optional[Expr] = None

    def children(self):
        return [self.test, self.then] + ([self.orelse] if self.orelse is not None else [])


@dataclass
class Cond(Expr):
    arms: list  # [(test, [body...])]
    orelse: Optional[list] = None

    def children(self):
        out = []
        for test, body in self.arms:
            out.append(test)
            out.extend(body)
        if self.orelse:
            out.extend(self.orelse)
        return out


@dataclass
class New(Expr):
    class_name: str
    ctor: Optional[str]
    args: list

    def children(self):
        return list(self.args)


@dataclass
class Invoke(Expr):
    selector: str
    receiver: Expr
    args: list

    def children(self):
        return [self.receiver] + list(self.args)


@dataclass
class SpawnActor(Expr):
    behaviour: str
    ctor: str
    args: list

    def children(self):
        return list(self.args)


@dataclass
class SpawnReactor(Expr):
    behaviour: str


@dataclass
class Send(Expr):
    target: Expr
    selector: str
    args: list

    def children(self):
        return [self.target] + list(self.args)


@dataclass
class Emit(Expr):
    stream: str
    args: list

    def children(self):
        return list(self.args)


@dataclass
class Monitor(Expr):
    stream: Expr
    selector: str

    def children(self):
        return [self.stream]


@dataclass
class ReactTo(Expr):
    target: Expr
    args: list

    def children(self):
        return [self.target] + list(self.args)


@dataclass
class Tick(Expr):
    behaviour: str
    args: list

    def children(self):
        return list(self.args)


@dataclass
class Ror(Expr):
    out: str
    inputs: list


# the forms rejected in routines and reactor bodies
FORBIDDEN_FORMS = {
    SetBang: "set!",
    SpawnActor: "spawn-actor",
    SpawnReactor: "spawn-reactor",
    Send: "send",
    Emit: "emit",
    Monitor: "monitor",
    ReactTo: "react-to",
}

SPECIAL_FORMS = frozenset({
    "def", "def-values", "set!", "if", "cond", "new", "spawn-actor",
    "spawn-reactor", "send", "emit", "monitor", "react-to", "tick", "ror",
    "out", "else",
})


# -- program definitions -----------------------------------------------------

@dataclass
class ActorBehaviourDef(ClassDef):
    streams: dict = field(default_factory=dict)  # name -> arity


@dataclass
class ReactorBehaviourDef:
    name: str
    params: list
    body: list = field(default_factory=list)
    outs: Optional[list] = None
    ror: Optional[Ror] = None
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass
class ProgramDef:
    classes: dict = field(default_factory=dict)
    actors: dict = field(default_factory=dict)
    reactors: dict = field(default_factory=dict)


# -- reader ------------------------------------------------------------------

@dataclass
class SList:
    items: list
    pos: tuple


def read(tokens: list) -> list:
    """Group tokens into nested :class:`SList` forms."""
    stack = [[]]
    opens = []
    for tok in tokens:
        if tok.kind == OPEN:
            opens.append(tok.pos)
            stack.append([])
        elif tok.kind == CLOSE:
            if not opens:
                raise ParseError("unexpected ')'", tok.pos)
            items = stack.pop()
            stack[-1].append(SList(items, opens.pop()))
        else:
            stack[-1].append(tok)
    if opens:
        raise ParseError("unclosed '('", opens[-1])
    return stack[0]


def _pos(node):
    return node.pos


def _ident(node, what="identifier") -> str:
    if isinstance(node, Token) and node.kind == IDENT:
        return node.lexeme
    raise ParseError(f"expected {what}", _pos(node))


def _symbol(node, what="symbol literal") -> str:
    if isinstance(node, Token) and node.kind == SYMBOL:
        return node.lexeme
    raise ParseError(f"expected {what}", _pos(node))


def _head(node: SList):
    if node.items and isinstance(node.items[0], Token) and node.items[0].kind == IDENT:
        return node.items[0].lexeme
    return None


def _arity_check(node: SList, lo, hi=None, form=""):
    n = len(node.items) - 1
    if n < lo or (hi is not None and n > hi):
        raise ParseError(f"wrong number of operands to {form}", node.pos)


class _ExprParser:
    """Turns reader forms into :class:`Expr` trees.

    ``reactor`` enables ``tick`` (only legal inside reactor bodies).
    """

    def __init__(self, reactor=False):
        self.reactor = reactor

    def parse(self, node) -> Expr:
        if isinstance(node, Token):
            return self.atom(node)
        return self.form(node)

    def atom(self, tok: Token) -> Expr:
        k, text, pos = tok.kind, tok.lexeme, tok.pos
        if k == NUMBER:
            return Literal(float(text), pos=pos)
        if k == STRING:
            return Literal(text, pos=pos)
        if k == SYMBOL:
            return Literal(Symbol(text), pos=pos)
        if k == HASH:
            if text == "#self":
                return SelfRef(pos=pos)
            return Literal({"#true": True, "#false": False, "#undefined": UNDEFINED,
                            "#Pi": math.pi}[text], pos=pos)
        if k == QUALIFIED:
            owner, stream = text.split(".")
            return Qualification(owner, stream, pos=pos)
        if text in SPECIAL_FORMS:
            raise ParseError(f"special form '{text}' used as a variable", pos)
        return Var(text, pos=pos)

    def body(self, nodes) -> list:
        return [self.parse(n) for n in nodes]

    def form(self, node: SList) -> Expr:
        head = _head(node)
        items, pos = node.items, node.pos
        if head is None:
            raise ParseError("expected an operator or special form", pos)
        args = items[1:]
        if head == "def":
            _arity_check(node, 2, 2, "def")
            return Def(_ident(args[0]), self.parse(args[1]), pos=pos)
        if head == "def-values":
            if not self.reactor:
                raise ParseError("def-values is only legal in reactor bodies", pos)
            _arity_check(node, 2, 2, "def-values")
            if not isinstance(args[0], SList):
                raise ParseError("def-values expects a list of names", _pos(args[0]))
            names = [_ident(t) for t in args[0].items]
            return DefValues(names, self.parse(args[1]), pos=pos)
        if head == "set!":
            _arity_check(node, 2, 2, "set!")
            return SetBang(_ident(args[0]), self.parse(args[1]), pos=pos)
        if head == "if":
            _arity_check(node, 2, 3, "if")
            parts = self.body(args)
            return If(*parts, pos=pos)
        if head == "cond":
            return self.cond(node)
        if head == "new":
            _arity_check(node, 1, None, "new")
            cls = _ident(args[0], "class name")
            ctor = None
            rest = args[1:]
            if rest and isinstance(rest[0], Token) and rest[0].kind == SYMBOL:
                ctor = rest[0].lexeme
                rest = rest[1:]
            return New(cls, ctor, self.body(rest), pos=pos)
        if head == "spawn-actor":
            _arity_check(node, 2, None, "spawn-actor")
            return SpawnActor(_ident(args[0], "behaviour name"), _symbol(args[1], "constructor symbol"),
                              self.body(args[2:]), pos=pos)
        if head == "spawn-reactor":
            _arity_check(node, 1, 1, "spawn-reactor")
            return SpawnReactor(_ident(args[0], "behaviour name"), pos=pos)
        if head == "send":
            _arity_check(node, 2, None, "send")
            return Send(self.parse(args[0]), _symbol(args[1], "selector symbol"),
                        self.body(args[2:]), pos=pos)
        if head == "emit":
            _arity_check(node, 1, None, "emit")
            return Emit(_ident(args[0], "stream name"), self.body(args[1:]), pos=pos)
        if head == "monitor":
            _arity_check(node, 2, 2, "monitor")
            return Monitor(self.parse(args[0]), _symbol(args[1], "selector symbol"), pos=pos)
        if head == "react-to":
            _arity_check(node, 1, None, "react-to")
            return ReactTo(self.parse(args[0]), self.body(args[1:]), pos=pos)
        if head == "tick":
            if not self.reactor:
                raise ParseError("tick is only legal inside reactor behaviours", pos)
            _arity_check(node, 1, None, "tick")
            return Tick(_ident(args[0], "behaviour name"), self.body(args[1:]), pos=pos)
        if head == "ror":
            raise ParseError("ror is only legal as the whole body of a reactor definition", pos)
        if head in ("out", "else"):
            raise ParseError(f"'{head}' is not legal here", pos)
        if not args:
            raise ParseError(f"invocation of '{head}' needs a receiver", pos)
        return Invoke(head, self.parse(args[0]), self.body(args[1:]), pos=pos)

    def cond(self, node: SList) -> Cond:
        arms, orelse = [], None
        clauses = node.items[1:]
        for i, clause in enumerate(clauses):
            if not isinstance(clause, SList) or not clause.items:
                raise ParseError("malformed cond clause", _pos(clause))
            if _head(clause) == "else":
                if i != len(clauses) - 1:
                    raise ParseError("else must be the last cond clause", clause.pos)
                orelse = self.body(clause.items[1:])
                continue
            if len(clause.items) < 2:
                raise ParseError("cond clause needs a body", clause.pos)
            arms.append((self.parse(clause.items[0]), self.body(clause.items[1:])))
        return Cond(arms, orelse, pos=node.pos)


def _signature(node, what):
    if not isinstance(node, SList) or not node.items:
        raise ParseError(f"expected ({what} params...)", _pos(node))
    name = _ident(node.items[0], what)
    params = [_ident(p, "parameter name") for p in node.items[1:]]
    if len(set(params)) != len(params):
        raise ParseError(f"duplicate parameter in {name}", node.pos)
    return name, params


def _parse_members(node: SList, bdef: ClassDef, actor: bool):
    parser = _ExprParser()
    seen = set()
    for member in node.items[2:]:
        head = _head(member) if isinstance(member, SList) else None
        if head == "def-fields":
            for t in member.items[1:]:
                name = _ident(t, "field name")
                if name in bdef.fields:
                    raise ParseError(f"duplicate field {name}", _pos(t))
                bdef.fields.append(name)
        elif head == "def-stream":
            if not actor:
                raise ParseError("def-stream is only legal in actor behaviours", member.pos)
            _arity_check(member, 2, 2, "def-stream")
            name = _ident(member.items[1], "stream name")
            tok = member.items[2]
            if not (isinstance(tok, Token) and tok.kind == NUMBER):
                raise ParseError("stream arity must be a number", _pos(tok))
            arity = float(tok.lexeme)
            if not arity.is_integer() or arity < 1:
                raise ParseError("stream arity must be a positive whole number", tok.pos)
            if name in bdef.streams:
                raise ParseError(f"duplicate stream {name}", member.pos)
            bdef.streams[name] = int(arity)
        elif head in ("def-constructor", "def-method", "def-routine"):
            _arity_check(member, 1, None, head)
            name, params = _signature(member.items[1], "member name")
            if name in seen:
                raise ParseError(f"duplicate member {name} in {bdef.name}", member.pos)
            seen.add(name)
            kind = head[4:]
            mdef = MemberDef(name, params, parser.body(member.items[2:]), kind, member.pos)
            {"constructor": bdef.constructors, "method": bdef.methods,
             "routine": bdef.routines}[kind][name] = mdef
        else:
            raise ParseError("unknown member form", _pos(member))


def _parse_reactor(node: SList) -> ReactorBehaviourDef:
    _arity_check(node, 2, None, "reactor")
    sig = node.items[1]
    if isinstance(sig, Token):
        name = _ident(sig, "reactor name")
        if len(node.items) != 3 or _head(node.items[2]) != "ror":
            raise ParseError("short reactor form must be (reactor Name (ror Out In...))", node.pos)
        ror = node.items[2]
        _arity_check(ror, 2, None, "ror")
        names = [_ident(t, "behaviour name") for t in ror.items[1:]]
        return ReactorBehaviourDef(name, [], ror=Ror(names[0], names[1:], pos=ror.pos),
                                   pos=node.pos)
    name, params = _signature(sig, "reactor name")
    rdef = ReactorBehaviourDef(name, params, pos=node.pos)
    parser = _ExprParser(reactor=True)
    for item in node.items[2:]:
        if isinstance(item, SList) and _head(item) == "out":
            if rdef.outs is not None:
                raise ParseError(f"reactor {name} has more than one out form", item.pos)
            rdef.outs = parser.body(item.items[1:])
        else:
            rdef.body.append(parser.parse(item))
    return rdef


def parse_program(tokens: list) -> ProgramDef:
    prog = ProgramDef()
    for node in read(tokens):
        head = _head(node) if isinstance(node, SList) else None
        if head in ("class", "actor"):
            _arity_check(node, 1, None, head)
            name = _ident(node.items[1], f"{head} name")
            table = prog.classes if head == "class" else prog.actors
            if name in table:
                raise ParseError(f"duplicate {head} {name}", node.pos)
            bdef = ClassDef(name, pos=node.pos) if head == "class" else \
                ActorBehaviourDef(name, pos=node.pos)
            _parse_members(node, bdef, actor=head == "actor")
            table[name] = bdef
        elif head == "reactor":
            rdef = _parse_reactor(node)
            if rdef.name in prog.reactors:
                raise ParseError(f"duplicate reactor {rdef.name}", node.pos)
            prog.reactors[rdef.name] = rdef
        else:
            raise ParseError("unknown top-level form", _pos(node))
    main = prog.actors.get("Main")
    if main is None:
        raise ParseError("program has no actor behaviour named Main")
    start = main.constructors.get("start")
    if start is None:
        raise ParseError("actor Main has no constructor named start", main.pos)
    if start.params:
        raise ParseError("constructor start must take no arguments", start.pos)
    return prog


def parse(source: str) -> ProgramDef:
    return parse_program(tokenize(source))


def parse_expr(source: str, reactor=False) -> Expr:
    """Parse a single expression (handy for tests and the REPL-less demos)."""
    forms = read(tokenize(source))
    if len(forms) != 1:
        raise ParseError("expected exactly one expression")
    return _ExprParser(reactor).parse(forms[0])


# -- purity ------------------------------------------------------------------

def walk(expr: Expr):
    """Pre-order traversal of an expression tree."""
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        stack.extend(reversed(e.children()))


def check_purity(body, context: str):
    """Reject forbidden special forms anywhere in ``body``.

    ``body`` is an expression or a list of them; ``context`` names the
    enclosing definition for the diagnostic.
    """
    exprs = body if isinstance(body, list) else [body]
    for root in exprs:
        for e in walk(root):
            form = FORBIDDEN_FORMS.get(type(e))
            if form is not None:
                raise PurityViolation(form, context, e.pos)


def check_program_purity(prog: ProgramDef):
    for cdef in list(prog.classes.values()) + list(prog.actors.values()):
        for r in cdef.routines.values():
            check_purity(r.body, f"routine {cdef.name}>>{r.name}")
    for rdef in prog.reactors.values():
        check_purity(rdef.body + (rdef.outs or []), f"reactor {rdef.name}")


# -- printer -----------------------------------------------------------------

def _num(v: float) -> str:
    if v == math.pi:
        return "#Pi"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _lit(v) -> str:
    if v is True:
        return "#true"
    if v is False:
        return "#false"
    if v is UNDEFINED:
        return "#undefined"
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, Symbol):
        return "'" + v.name
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(v)


def unparse(e: Expr) -> str:
    def many(xs):
        return "".join(" " + unparse(x) for x in xs)

    if isinstance(e, Literal):
        return _lit(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, SelfRef):
        return "#self"
    if isinstance(e, Qualification):
        return f"{e.owner}.{e.stream}"
    if isinstance(e, Def):
        return f"(def {e.name} {unparse(e.value)})"
    if isinstance(e, DefValues):
        return f"(def-values ({' '.join(e.names)}) {unparse(e.value)})"
    if isinstance(e, SetBang):
        return f"(set! {e.name} {unparse(e.value)})"
    if isinstance(e, If):
        return "(if" + many(e.children()) + ")"
    if isinstance(e, Cond):
        arms = "".join(f" ({unparse(t)}{many(b)})" for t, b in e.arms)
        if e.orelse is not None:
            arms += f" (else{many(e.orelse)})"
        return "(cond" + arms + ")"
    if isinstance(e, New):
        ctor = f" '{e.ctor}" if e.ctor else ""
        return f"(new {e.class_name}{ctor}{many(e.args)})"
    if isinstance(e, Invoke):
        return f"({e.selector} {unparse(e.receiver)}{many(e.args)})"
    if isinstance(e, SpawnActor):
        return f"(spawn-actor {e.behaviour} '{e.ctor}{many(e.args)})"
    if isinstance(e, SpawnReactor):
        return f"(spawn-reactor {e.behaviour})"
    if isinstance(e, Send):
        return f"(send {unparse(e.target)} '{e.selector}{many(e.args)})"
    if isinstance(e, Emit):
        return f"(emit {e.stream}{many(e.args)})"
    if isinstance(e, Monitor):
        return f"(monitor {unparse(e.stream)} '{e.selector})"
    if isinstance(e, ReactTo):
        return f"(react-to {unparse(e.target)}{many(e.args)})"
    if isinstance(e, Tick):
        return f"(tick {e.behaviour}{many(e.args)})"
    if isinstance(e, Ror):
        return f"(ror {e.out} {' '.join(e.inputs)})"
    raise TypeError(e)


def _unparse_members(cdef: ClassDef) -> list:
    lines = []
    for name, arity in getattr(cdef, "streams", {}).items():
        lines.append(f"  (def-stream {name} {arity})")
    if cdef.fields:
        lines.append(f"  (def-fields {' '.join(cdef.fields)})")
    for table in (cdef.constructors, cdef.methods, cdef.routines):
        for m in table.values():
            sig = " ".join([m.name] + m.params)
            body = "".join("\n    " + unparse(b) for b in m.body)
            lines.append(f"  (def-{m.kind} ({sig}){body})")
    return lines


def unparse_program(prog: ProgramDef) -> str:
    out = []
    for cdef in prog.classes.values():
        out.append("\n".join([f"(class {cdef.name}"] + _unparse_members(cdef)) + ")")
    for adef in prog.actors.values():
        out.append("\n".join([f"(actor {adef.name}"] + _unparse_members(adef)) + ")")
    for r in prog.reactors.values():
        if r.ror is not None:
            out.append(f"(reactor {r.name} {unparse(r.ror)})")
            continue
        lines = [f"(reactor ({' '.join([r.name] + r.params)})"]
        lines += ["  " + unparse(b) for b in r.body]
        if r.outs is not None:
            lines.append("  (out" + "".join(" " + unparse(o) for o in r.outs) + ")")
        out.append("\n".join(lines) + ")")
    return "\n\n".join(out) + "\n"
