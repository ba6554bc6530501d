"""Processes, mailboxes, streams and actors."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Optional

from .errors import (ArityError, ArlangRuntimeError, ArlangTypeError, StreamError,
                     UnknownSelector)
from .evaluator import Evaluator
from .termination import Guard, frame_for
from .values import UNDEFINED, ActorRef, StreamRef, deep_copy, is_number

CONSTRUCT, INVOKE, PUBLICATION, REBIND = "construct", "invoke", "publication", "rebind"


@dataclass
class Message:
    kind: str
    selector: Optional[str] = None
    args: list = field(default_factory=list)
    stream: Optional[StreamRef] = None
    token: Optional[int] = None  # subscription generation, for publications
    sender: Optional[int] = None
    pos: tuple = None


@dataclass
class Subscription:
    token: int
    subscriber: int  # pid
    stream: StreamRef


@dataclass
class StreamState:
    arity: int
    subscribers: dict = field(default_factory=dict)  # token -> Subscription
    last: Optional[tuple] = None


class Mailbox:
    """FIFO ordered by (delivery time, arrival)."""

    _seq = itertools.count()

    def __init__(self):
        self._heap = []

    def put(self, msg, time=0.0):
        heapq.heappush(self._heap, (time, next(Mailbox._seq), msg))

    def get(self):
        return heapq.heappop(self._heap)[2]

    def peek(self):
        return self._heap[0][2] if self._heap else None

    def head_time(self):
        return self._heap[0][0] if self._heap else None

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def messages(self):
        return [m for _, _, m in sorted(self._heap, key=lambda e: e[:2])]


class Process:
    """State shared by actors and reactors.

    A process is also the evaluator's host: effects requested by the code
    it runs are forwarded to the runtime with this process as the source.
    """

    kind = "process"

    def __init__(self, runtime, pid, behaviour):
        self.runtime = runtime
        self.pid = pid
        self.behaviour = behaviour
        self.mailbox = Mailbox()
        self.streams = {}
        self.local_time = 0.0
        self.ready_time = 0.0
        self.guard = Guard(trace=runtime.sct_trace)
        self.evaluator = Evaluator(runtime.program.classes, self, self.guard)
        self.turns = 0
        self.current = None  # message being processed

    def __str__(self):
        return f"{self.behaviour}#{self.pid}"

    @property
    def ref(self):
        raise NotImplementedError

    self_ref = None

    # -- host interface ----------------------------------------------------

    def output(self, text):
        self.runtime.write_output(self, text)

    def spawn_actor(self, behaviour, ctor, args, pos=None):
        return self.runtime.spawn_actor(behaviour, ctor, args, sender=self, pos=pos)

    def spawn_reactor(self, behaviour, pos=None):
        return self.runtime.spawn_reactor(behaviour, sender=self, pos=pos)

    def send(self, target, selector, args, pos=None):
        self.runtime.send(self, target, selector, args, pos)

    def emit(self, stream, values, pos=None):
        state = self.streams.get(stream)
        if state is None:
            raise StreamError(f"{self} declares no stream {stream}", pos)
        if len(values) != state.arity:
            raise ArityError(f"stream {stream} has arity {state.arity}, emitted "
                             f"{len(values)} value(s)", pos)
        self.runtime.publish(self, stream, values)

    def qualify(self, ref, stream, pos=None):
        return self.runtime.qualify(ref, stream, pos)

    def monitor(self, sref, selector, pos=None):
        self.runtime.monitor(self, sref, selector, pos)

    def react_to(self, target, args, pos=None):
        self.runtime.react_to(self, target, args, pos)

    def sleep(self, ms):
        if not is_number(ms) or ms < 0:
            raise ArlangTypeError("sleep expects a non-negative number of milliseconds")
        self.runtime.scheduler.sleep(self, ms)

    def new_random(self):
        return self.runtime.new_random()

    # -- turns -------------------------------------------------------------

    def step(self, msg):
        self.current = msg
        self.turns += 1
        try:
            self.handle(msg)
        finally:
            self.current = None

    def handle(self, msg):
        raise NotImplementedError


class ActorProcess(Process):
    kind = "actor"

    def __init__(self, runtime, pid, bdef):
        super().__init__(runtime, pid, bdef.name)
        self.bdef = bdef
        self.fields = {name: UNDEFINED for name in bdef.fields}
        self.streams = {name: StreamState(arity) for name, arity in bdef.streams.items()}
        self.constructed = False
        self._ref = ActorRef(pid, bdef.name)

    @property
    def ref(self):
        return self._ref

    @property
    def self_ref(self):
        return self._ref

    def handle(self, msg):
        if msg.kind == CONSTRUCT:
            if self.constructed:
                raise ArlangRuntimeError("constructor invoked twice", msg.pos, msg.selector)
            self.constructed = True
            member = self.bdef.constructors[msg.selector]
            self._run(member, msg.args, "constructor")
        elif msg.kind == INVOKE:
            self.invoke_member(msg.selector, msg.args, msg.pos)
        elif msg.kind == PUBLICATION:
            if not self.runtime.subscription_active(msg.stream, msg.token):
                self.runtime.stale_drops += 1
                return
            selector = self.runtime.monitor_selector(msg.token)
            member = self._member(selector, msg.pos)
            if len(member.params) != len(msg.args):
                raise ArityError(f"handler {self.behaviour}>>{selector} takes "
                                 f"{len(member.params)} parameter(s) but {msg.stream.name} "
                                 f"delivers {len(msg.args)} value(s)", msg.pos, selector)
            self._run(member, msg.args, "method")
        else:
            raise ArlangRuntimeError(f"actors cannot process {msg.kind} messages")

    def _member(self, selector, pos=None):
        found = self.bdef.lookup(selector)
        if found is None or found[1] == "constructor":
            raise UnknownSelector(f"{self.behaviour} does not understand {selector}",
                                  pos, selector)
        return found[0]

    def invoke_member(self, selector, args, pos=None):
        member = self._member(selector, pos)
        kind = self.bdef.lookup(selector)[1]
        self._run(member, args, kind)

    def _run(self, member, args, kind):
        self.guard.reset()
        if kind == "routine":
            self.guard.enter(frame_for(self.behaviour, member.name, self._ref, args))
        self.evaluator.run_member(member, self._ref, self.fields, args, kind,
                                  self.behaviour, actor=True)


def check_stream_args(args, n_sources, pos=None):
    """Expanded react-to arity: a stream of arity k covers k sources."""
    width = sum(a.arity if isinstance(a, StreamRef) else 1 for a in args)
    if width != n_sources:
        raise ArityError(f"react-to supplies {width} source value(s) for "
                         f"{n_sources} source(s)", pos)


def copy_args(args):
    memo = {}
    return [deep_copy(a, memo) for a in args]
