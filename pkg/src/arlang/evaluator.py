"""Tree-walking evaluator.

An :class:`Evaluator` belongs to one process.  Effects that leave the
process (printing, spawning, messaging, streams) are delegated to a *host*
object; see :class:`NullHost` for the interface.  Purity is tracked per
activation: routine and dag-apply activations are pure, and so is any
constructor run on behalf of a pure caller.
"""

from __future__ import annotations

import math
import random

from . import syntax as S
from .errors import (ArityError, ArlangRuntimeError, ArlangTypeError,
                     PureContextError, UnboundName, UnknownBehaviour, UnknownSelector)
from .termination import Guard, frame_for
from .values import (RANDOM_CLASS, UNDEFINED, ActorRef, Instance, ReactorRef,
                     StreamRef, class_name, equals, format_value, is_number,
                     ref_equals, truthy, type_of)

PURE_KINDS = frozenset({"routine", "dag-apply"})


class Scope:
    __slots__ = ("vars", "parent")

    def __init__(self, vars=None, parent=None):
        self.vars = vars if vars is not None else {}
        self.parent = parent

    def find(self, name):
        s = self
        while s is not None:
            if name in s.vars:
                return s
            s = s.parent
        return None


class Activation:
    """One executing constructor, method, routine or dag-apply node."""

    __slots__ = ("kind", "owner", "selector", "receiver", "fields", "params",
                 "scope", "pure", "parent", "actor")

    def __init__(self, kind, owner, selector, receiver=UNDEFINED, fields=None,
                 params=(), scope=None, parent=None, actor=False):
        self.kind = kind
        self.owner = owner
        self.selector = selector
        self.receiver = receiver
        self.fields = fields
        self.params = frozenset(params)
        self.scope = scope if scope is not None else Scope()
        self.parent = parent
        # purity is inherited: nothing below a pure frame may be impure
        self.pure = kind in PURE_KINDS or (parent is not None and parent.pure)
        self.actor = actor

    def chain(self):
        a = self
        while a is not None:
            yield a
            a = a.parent


class NullHost:
    """Host with no process behind it, used for compile-time folding.

    Every effect is refused; pure code never reaches these methods because
    the evaluator rejects effects in pure activations first.
    """

    self_ref = None

    def _refuse(self, what, pos=None):
        raise ArlangRuntimeError(f"{what} is not available here", pos)

    def output(self, text):
        self._refuse("output")

    def spawn_actor(self, behaviour, ctor, args, pos=None):
        self._refuse("spawn-actor", pos)

    def spawn_reactor(self, behaviour, pos=None):
        self._refuse("spawn-reactor", pos)

    def send(self, target, selector, args, pos=None):
        self._refuse("send", pos)

    def emit(self, stream, values, pos=None):
        self._refuse("emit", pos)

    def qualify(self, ref, stream, pos=None):
        self._refuse("qualification", pos)

    def monitor(self, sref, selector, pos=None):
        self._refuse("monitor", pos)

    def react_to(self, target, args, pos=None):
        self._refuse("react-to", pos)

    def sleep(self, ms):
        self._refuse("sleep")

    def new_random(self):
        return random.Random(0)


def _num_args(selector, receiver, args, pos):
    for v in (receiver, *args):
        if not is_number(v):
            raise ArlangTypeError(
                f"{selector} expects numbers, got {class_name(v)}", pos, selector)


def _divide(a, b):
    if b == 0:
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _expt(a, b):
    try:
        return math.pow(a, b)
    except OverflowError:
        return math.inf
    except ValueError:
        return math.nan


def _fold(fn, receiver, args):
    acc = receiver
    for x in args:
        acc = fn(acc, x)
    return acc


# (min args, max args or None, implementation); receiver excluded from counts
NUMBER_ROUTINES = {
    "+": (0, None, lambda r, a: float(_fold(lambda x, y: x + y, r, a))),
    "*": (0, None, lambda r, a: float(_fold(lambda x, y: x * y, r, a))),
    "-": (0, None, lambda r, a: -r if not a else float(_fold(lambda x, y: x - y, r, a))),
    "/": (1, None, lambda r, a: _fold(_divide, r, a)),
    "expt": (1, 1, lambda r, a: _expt(r, a[0])),
    "round": (0, 0, lambda r, a: float(math.floor(r + 0.5)) if math.isfinite(r) else r),
    "<": (1, 1, lambda r, a: r < a[0]),
    ">": (1, 1, lambda r, a: r > a[0]),
    "<=": (1, 1, lambda r, a: r <= a[0]),
    ">=": (1, 1, lambda r, a: r >= a[0]),
}

UNIVERSAL_ROUTINES = {
    "type-of": (0, lambda r, a: type_of(r)),
    "equal?": (1, lambda r, a: equals(r, a[0])),
    "eq?": (1, lambda r, a: ref_equals(r, a[0])),
}

NATIVE_METHODS = {
    ("Number", "sleep"),
    ("String", "println"),
    ("Random", "integer-between"),
}


def member_kind(receiver, selector):
    """``'routine'``, ``'method'``, ``'constructor'`` or ``None``."""
    if selector in UNIVERSAL_ROUTINES:
        return "routine"
    cname = class_name(receiver)
    if (cname, selector) in NATIVE_METHODS:
        return "method"
    if cname == "Number" and selector in NUMBER_ROUTINES:
        return "routine"
    if isinstance(receiver, Instance) and receiver.cls is not RANDOM_CLASS:
        found = receiver.cls.lookup(selector)
        return found[1] if found else None
    return None


class Evaluator:
    """Evaluates expressions for one process.

    ``classes`` maps class names to :class:`ClassDef`; ``host`` performs
    effects; ``guard`` is the process's termination guard.
    """

    def __init__(self, classes, host=None, guard=None):
        self.classes = classes
        self.host = host if host is not None else NullHost()
        self.guard = guard if guard is not None else Guard()
        self.invocations = 0
        self._dispatch = {
            S.Literal: self._literal,
            S.Var: self._var,
            S.SelfRef: self._self,
            S.Qualification: self._qualification,
            S.Def: self._def,
            S.SetBang: self._set,
            S.If: self._if,
            S.Cond: self._cond,
            S.New: self._new,
            S.Invoke: self._invoke,
            S.SpawnActor: self._spawn_actor,
            S.SpawnReactor: self._spawn_reactor,
            S.Send: self._send,
            S.Emit: self._emit,
            S.Monitor: self._monitor,
            S.ReactTo: self._react_to,
        }

    # -- entry points ------------------------------------------------------

    def eval(self, expr, act):
        fn = self._dispatch.get(type(expr))
        if fn is None:
            raise ArlangRuntimeError(f"{type(expr).__name__} cannot be evaluated here",
                                     expr.pos)
        return fn(expr, act)

    def eval_body(self, body, act):
        result = UNDEFINED
        for e in body:
            result = self.eval(e, act)
        return result

    def run_member(self, member, receiver, fields, args, kind, owner, parent=None,
                   actor=False):
        """Execute ``member`` with ``args`` bound; returns the body's last value."""
        if len(args) != len(member.params):
            raise ArityError(f"{owner}>>{member.name} expects {len(member.params)} "
                             f"arguments, got {len(args)}", member.pos, member.name)
        act = Activation(kind, owner, member.name, receiver, fields, member.params,
                         Scope(dict(zip(member.params, args))), parent, actor)
        return self.eval_body(member.body, act)

    def apply(self, receiver, selector, args, pos=None):
        """Invoke ``selector`` from a dag-apply (pure) context."""
        act = Activation("dag-apply", "<dag>", selector)
        return self.invoke(receiver, selector, list(args), act, pos)

    def instantiate(self, class_name_, ctor, args, caller, pos=None):
        if class_name_ == "Random":
            if ctor is not None or args:
                raise ArityError("Random has a single zero-argument constructor", pos)
            return Instance(RANDOM_CLASS, {}, self.host.new_random())
        cls = self.classes.get(class_name_)
        if cls is None:
            raise UnknownBehaviour(f"unknown class {class_name_}", pos)
        inst = Instance(cls)
        if ctor is None:
            if args:
                raise ArityError(f"new {class_name_} without a constructor takes no arguments",
                                 pos)
            return inst
        member = cls.constructors.get(ctor)
        if member is None:
            raise UnknownSelector(f"{class_name_} has no constructor {ctor}", pos, ctor)
        guarded = caller is not None and caller.pure
        if guarded:
            self.guard.enter(frame_for(class_name_, ctor, inst, args), pos)
        try:
            self.run_member(member, inst, inst.fields, args, "constructor", class_name_,
                            caller)
        finally:
            if guarded:
                self.guard.exit()
        return inst

    def invoke(self, receiver, selector, args, caller, pos=None):
        self.invocations += 1
        universal = UNIVERSAL_ROUTINES.get(selector)
        if universal is not None:
            nargs, fn = universal
            if len(args) != nargs:
                raise ArityError(f"{selector} expects {nargs} argument(s)", pos, selector)
            return fn(receiver, args)
        cname = class_name(receiver)
        if (cname, selector) in NATIVE_METHODS:
            if caller.pure:
                raise PureContextError(f"method {cname}>>{selector} called from a "
                                       f"{caller.kind} context", pos, selector)
            return self._native_method(cname, selector, receiver, args, pos)
        if cname == "Number" and selector in NUMBER_ROUTINES:
            lo, hi, fn = NUMBER_ROUTINES[selector]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise ArityError(f"{selector} got {len(args)} argument(s)", pos, selector)
            _num_args(selector, receiver, args, pos)
            return fn(receiver, args)
        if isinstance(receiver, Instance) and receiver.cls is not RANDOM_CLASS:
            found = receiver.cls.lookup(selector)
            if found is not None:
                member, kind = found
                if kind == "constructor":
                    raise UnknownSelector(f"constructor {cname}>>{selector} can only be "
                                          f"used with new", pos, selector)
                if kind == "method":
                    if caller.pure:
                        raise PureContextError(f"method {cname}>>{selector} called from a "
                                               f"{caller.kind} context", pos, selector)
                    return self.run_member(member, receiver, receiver.fields, args,
                                           "method", cname, caller)
                self.guard.enter(frame_for(cname, selector, receiver, args), pos)
                try:
                    return self.run_member(member, receiver, receiver.fields, args,
                                           "routine", cname, caller)
                finally:
                    self.guard.exit()
        raise UnknownSelector(f"{cname} does not understand {selector}", pos, selector)

    # -- natives -----------------------------------------------------------

    def _native_method(self, cname, selector, receiver, args, pos):
        if selector == "println":
            self.host.output("".join(format_value(v) for v in (receiver, *args)))
            return UNDEFINED
        if selector == "sleep":
            if args:
                raise ArityError("sleep takes no arguments", pos, selector)
            self.host.sleep(receiver)
            return UNDEFINED
        if selector == "integer-between":
            if len(args) != 2:
                raise ArityError("integer-between expects 2 arguments", pos, selector)
            _num_args(selector, 0.0, args, pos)
            lo, hi = math.ceil(args[0]), math.floor(args[1])
            if lo > hi:
                raise ArlangRuntimeError("integer-between: empty range", pos, selector)
            return float(receiver.native.randint(lo, hi))
        raise UnknownSelector(f"{cname} does not understand {selector}", pos, selector)

    # -- special forms -----------------------------------------------------

    def _literal(self, e, act):
        return e.value

    def _var(self, e, act):
        scope = act.scope.find(e.name)
        if scope is not None:
            return scope.vars[e.name]
        if act.fields is not None and e.name in act.fields:
            return act.fields[e.name]
        raise UnboundName(f"unbound identifier {e.name}", e.pos)

    def _self(self, e, act):
        if act.pure or not act.actor or self.host.self_ref is None:
            raise ArlangRuntimeError("#self used outside an actor", e.pos)
        return self.host.self_ref

    def _qualification(self, e, act):
        owner = self._var(S.Var(e.owner, pos=e.pos), act)
        if not isinstance(owner, (ActorRef, ReactorRef)):
            raise ArlangTypeError(f"cannot qualify a {class_name(owner)}", e.pos)
        return self.host.qualify(owner, e.stream, e.pos)

    def _def(self, e, act):
        if e.name in act.params:
            raise ArlangRuntimeError(f"def of {e.name} shadows a parameter", e.pos)
        value = self.eval(e.value, act)
        act.scope.vars[e.name] = value
        return value

    def _set(self, e, act):
        value = self.eval(e.value, act)
        scope = act.scope.find(e.name)
        if scope is not None:
            scope.vars[e.name] = value
        elif act.fields is not None and e.name in act.fields:
            if act.pure and act.kind != "constructor":
                raise PureContextError(f"set! of field {e.name} in a pure context", e.pos)
            act.fields[e.name] = value
        else:
            raise UnboundName(f"set! of unbound identifier {e.name}", e.pos)
        return value

    def _if(self, e, act):
        if truthy(self.eval(e.test, act)):
            return self.eval(e.then, act)
        if e.orelse is not None:
            return self.eval(e.orelse, act)
        return UNDEFINED

    def _cond(self, e, act):
        for test, body in e.arms:
            if truthy(self.eval(test, act)):
                return self._nested(body, act)
        if e.orelse is not None:
            return self._nested(e.orelse, act)
        return UNDEFINED

    def _nested(self, body, act):
        saved = act.scope
        act.scope = Scope(parent=saved)
        try:
            return self.eval_body(body, act)
        finally:
            act.scope = saved

    def _args(self, exprs, act):
        return [self.eval(a, act) for a in exprs]

    def _new(self, e, act):
        return self.instantiate(e.class_name, e.ctor, self._args(e.args, act), act, e.pos)

    def _invoke(self, e, act):
        receiver = self.eval(e.receiver, act)
        args = self._args(e.args, act)
        return self.invoke(receiver, e.selector, args, act, e.pos)

    def _effect(self, form, e, act):
        if act.pure:
            raise PureContextError(f"{form} in a {act.kind} context", e.pos)

    def _spawn_actor(self, e, act):
        self._effect("spawn-actor", e, act)
        return self.host.spawn_actor(e.behaviour, e.ctor, self._args(e.args, act), e.pos)

    def _spawn_reactor(self, e, act):
        self._effect("spawn-reactor", e, act)
        return self.host.spawn_reactor(e.behaviour, e.pos)

    def _send(self, e, act):
        self._effect("send", e, act)
        target = self.eval(e.target, act)
        args = self._args(e.args, act)
        self.host.send(target, e.selector, args, e.pos)
        return UNDEFINED

    def _emit(self, e, act):
        self._effect("emit", e, act)
        self.host.emit(e.stream, self._args(e.args, act), e.pos)
        return UNDEFINED

    def _monitor(self, e, act):
        self._effect("monitor", e, act)
        sref = self.eval(e.stream, act)
        if not isinstance(sref, StreamRef):
            raise ArlangTypeError(f"monitor expects a Stream, got {class_name(sref)}", e.pos)
        self.host.monitor(sref, e.selector, e.pos)
        return UNDEFINED

    def _react_to(self, e, act):
        self._effect("react-to", e, act)
        target = self.eval(e.target, act)
        args = self._args(e.args, act)
        if not isinstance(target, ReactorRef):
            raise ArlangTypeError(f"react-to expects a ReactorReference, got "
                                  f"{class_name(target)}", e.pos)
        self.host.react_to(target, args, e.pos)
        return UNDEFINED
