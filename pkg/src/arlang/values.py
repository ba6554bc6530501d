"""Runtime values and the object model.

Natives are plain Python objects: ``bool`` for booleans, ``float`` for numbers,
``str`` for strings, plus :class:`Symbol` and the :data:`UNDEFINED`
singleton.  Everything else is an :class:`Instance` or a process/stream
reference.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field


class _Undefined:
    __slots__ = ()

    def __repr__(self):
        return "#undefined"

    def __reduce__(self):
        return (_undefined, ())


def _undefined():
    return UNDEFINED


UNDEFINED = _Undefined.__new__(_Undefined)


@dataclass(frozen=True)
class Symbol:
    name: str

    def __repr__(self):
        return f"'{self.name}"


@dataclass
class MemberDef:
    """A constructor, method or routine of a class or actor behaviour."""

    name: str
    params: list
    body: list
    kind: str  # "constructor" | "method" | "routine"
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass
class ClassDef:
    name: str
    fields: list = field(default_factory=list)
    constructors: dict = field(default_factory=dict)
    methods: dict = field(default_factory=dict)
    routines: dict = field(default_factory=dict)
    pos: tuple = field(default=None, compare=False, repr=False)

    def lookup(self, selector):
        """Return ``(member, kind)`` or ``None``."""
        for kind, table in (("routine", self.routines), ("method", self.methods),
                            ("constructor", self.constructors)):
            if selector in table:
                return table[selector], kind
        return None


class Instance:
    """An object of a user-defined class (or the native ``Random`` class).

    ``native`` holds host state for built-in classes, e.g. the generator of
    a ``Random`` instance.
    """

    __slots__ = ("cls", "fields", "native")

    def __init__(self, cls, fields=None, native=None):
        self.cls = cls
        self.fields = fields if fields is not None else {f: UNDEFINED for f in cls.fields}
        self.native = native

    def __repr__(self):
        return f"<{self.cls.name} instance at {id(self):#x}>"


@dataclass(frozen=True)
class ActorRef:
    pid: int
    behaviour: str

    def __repr__(self):
        return f"<actor {self.behaviour}#{self.pid}>"


@dataclass(frozen=True)
class ReactorRef:
    pid: int
    behaviour: str

    def __repr__(self):
        return f"<reactor {self.behaviour}#{self.pid}>"


@dataclass(frozen=True)
class StreamRef:
    owner: object  # ActorRef | ReactorRef
    name: str
    arity: int

    def __repr__(self):
        return f"<stream {self.owner!r}.{self.name}/{self.arity}>"


RANDOM_CLASS = ClassDef("Random")

NATIVE_CLASS_NAMES = frozenset({
    "Boolean", "Number", "String", "Symbol", "Undefined",
    "ActorReference", "ReactorReference", "Stream", "Random",
})


def is_number(v) -> bool:
    return isinstance(v, float) and not isinstance(v, bool)


def type_of(v) -> Symbol:
    return Symbol(class_name(v))


def class_name(v) -> str:
    if isinstance(v, bool):
        return "Boolean"
    if isinstance(v, float):
        return "Number"
    if isinstance(v, str):
        return "String"
    if isinstance(v, Symbol):
        return "Symbol"
    if v is UNDEFINED:
        return "Undefined"
    if isinstance(v, Instance):
        return v.cls.name
    if isinstance(v, ActorRef):
        return "ActorReference"
    if isinstance(v, ReactorRef):
        return "ReactorReference"
    if isinstance(v, StreamRef):
        return "Stream"
    raise TypeError(f"not a runtime value: {v!r}")


def truthy(v) -> bool:
    return not (v is False or v is UNDEFINED)


def ref_equals(a, b) -> bool:
    """``eq?``: identity for instances, value equality for everything else."""
    if isinstance(a, Instance) or isinstance(b, Instance):
        return a is b
    return _atom_equal(a, b)


def _atom_equal(a, b) -> bool:
    # bool is an int subclass and 1.0 == True in Python
    if type(a) is not type(b):
        return False
    return a == b


def equals(a, b) -> bool:
    """``equal?``: structural equality, terminating on cyclic graphs.

    Pairs of instances already under comparison are assumed equal, which
    computes the greatest bisimulation.
    """
    assumed = set()

    def eq(x, y):
        if isinstance(x, Instance) and isinstance(y, Instance):
            if x is y:
                return True
            key = (id(x), id(y))
            if key in assumed:
                return True
            if x.cls is not y.cls or x.fields.keys() != y.fields.keys():
                return False
            if x.native is not None or y.native is not None:
                if isinstance(x.native, random.Random) and isinstance(y.native, random.Random):
                    return x.native.getstate() == y.native.getstate()
                return x.native is y.native
            assumed.add(key)
            return all(eq(x.fields[k], y.fields[k]) for k in x.fields)
        if isinstance(x, Instance) or isinstance(y, Instance):
            return False
        return _atom_equal(x, y)

    return eq(a, b)


def deep_copy(v, memo=None):
    """Copy a message payload.

    Instances are duplicated, preserving sharing and cycles inside the
    payload.  References designate processes, not data, and are shared.
    """
    if not isinstance(v, Instance):
        return v
    if memo is None:
        memo = {}
    key = id(v)
    if key in memo:
        return memo[key]
    native = v.native
    if isinstance(native, random.Random):
        native = random.Random()
        native.setstate(v.native.getstate())
    copy = Instance(v.cls, {}, native)
    memo[key] = copy
    for name, fv in v.fields.items():
        copy.fields[name] = deep_copy(fv, memo)
    return copy


def reachable_instances(v) -> int:
    seen = set()
    stack = [v]
    while stack:
        x = stack.pop()
        if not isinstance(x, Instance) or id(x) in seen:
            continue
        seen.add(id(x))
        stack.extend(x.fields.values())
    return len(seen)


def size(v) -> float:
    """Well-founded size measure used by the termination guard."""
    if isinstance(v, bool):
        return 0.0
    if isinstance(v, float):
        return abs(v)
    if isinstance(v, str):
        return float(len(v))
    if isinstance(v, Instance):
        return float(reachable_instances(v))
    return 0.0


def format_value(v) -> str:
    """Rendering used by ``println``."""
    if v is True:
        return "#true"
    if v is False:
        return "#false"
    if isinstance(v, float):
        if math.isfinite(v) and v.is_integer():
            return str(int(v))
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return v
    if isinstance(v, Symbol):
        return v.name
    if v is UNDEFINED:
        return "#undefined"
    if isinstance(v, Instance):
        return f"<{v.cls.name}>"
    return repr(v)
