"""Program loading and the process system.

>>> prog = load('(actor Main (def-constructor (start) (println "hi")))')
>>> Runtime(prog).run()
hi
0
"""

from __future__ import annotations

import random
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from . import syntax
from .actors import (CONSTRUCT, INVOKE, PUBLICATION, REBIND, ActorProcess, Message,
                     Subscription, check_stream_args, copy_args)
from .dag import Compiler
from .errors import (ArlangRuntimeError, ArlangTypeError, LoadError,
                     StreamError, UnknownBehaviour, UnknownSelector)
from .reactors import ReactorProcess
from .values import ActorRef, ReactorRef, StreamRef, class_name

EXIT_OK, EXIT_LOAD, EXIT_RUNTIME = 0, 1, 2

# routine recursion is guarded, not bounded; depth-1000 recursion needs room
RECURSION_LIMIT = 200_000
STACK_SIZE = 512 * 1024 * 1024


@dataclass
class Program:
    definition: syntax.ProgramDef
    dags: dict

    @property
    def classes(self):
        return self.definition.classes

    @property
    def actors(self):
        return self.definition.actors

    @property
    def reactors(self):
        return self.definition.reactors


def load(source: str) -> Program:
    """Parse, purity-check and compile a program.  Raises :class:`LoadError`."""
    prog = syntax.parse(source)
    syntax.check_program_purity(prog)
    dags = Compiler(prog.reactors, prog.classes).compile_all()
    return Program(prog, dags)


def load_file(path) -> Program:
    return load(Path(path).read_text(encoding="utf-8"))


def run_with_stack(fn, *args, **kwargs):
    """Run ``fn`` in a thread with a large stack and recursion limit."""
    result, error = [], []

    def target():
        try:
            result.append(fn(*args, **kwargs))
        except BaseException as exc:  # re-raised in the caller
            error.append(exc)

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, RECURSION_LIMIT))
    old_size = threading.stack_size(STACK_SIZE)
    try:
        t = threading.Thread(target=target, name="arlang")
        t.start()
    finally:
        threading.stack_size(old_size)
    t.join()
    if error:
        raise error[0]
    return result[0]


# -- schedulers ----------------------------------------------------------------

class DeterministicScheduler:
    """Single-flow scheduler on a virtual clock.

    A process is runnable when it is awake and the head of its mailbox has
    been delivered.  Among runnable processes the one that became eligible
    earliest runs first; ties go round-robin in spawn order.  When nothing
    is runnable the clock jumps to the next delivery or wake-up.
    """

    name = "deterministic"

    def __init__(self, runtime):
        self.runtime = runtime
        self.now = 0.0
        self._last = -1

    def stamp(self, sender):
        return sender.local_time if sender is not None else self.now

    def sleep(self, proc, ms):
        proc.local_time += float(ms)

    def on_spawn(self, proc, sender):
        proc.local_time = proc.ready_time = self.stamp(sender)

    def _eligible(self, proc):
        head = proc.mailbox.head_time()
        if head is None:
            return None
        return max(head, proc.ready_time)

    def _pick(self):
        procs = self.runtime.processes
        n = len(procs)
        best, best_key = None, None
        for proc in procs:
            t = self._eligible(proc)
            if t is None or t > self.now:
                continue
            key = (t, (proc.pid - self._last - 1) % n)
            if best_key is None or key < best_key:
                best, best_key = proc, key
        return best

    def run(self):
        rt = self.runtime
        while not rt.stopped():
            proc = self._pick()
            if proc is None:
                pending = [t for t in map(self._eligible, rt.processes) if t is not None]
                if not pending:
                    return
                self.now = min(pending)
                continue
            self._last = proc.pid
            proc.local_time = max(self.now, proc.ready_time)
            rt.execute(proc)
            proc.ready_time = proc.local_time


class ConcurrentScheduler:
    """One thread per process, real time ``sleep``.

    Runs until every mailbox is empty and no process is mid-turn, or until
    the turn budget is spent.
    """

    name = "concurrent"

    def __init__(self, runtime):
        self.runtime = runtime
        self.cond = threading.Condition(runtime.lock)
        self.busy = 0
        self.threads = []
        self.done = False

    def stamp(self, sender):
        return 0.0

    def sleep(self, proc, ms):
        time.sleep(float(ms) / 1000.0)

    def on_spawn(self, proc, sender):
        if self.threads or sender is not None:
            self._start(proc)

    def notify(self):
        with self.cond:
            self.cond.notify_all()

    def _start(self, proc):
        old = threading.stack_size(64 * 1024 * 1024)
        try:
            t = threading.Thread(target=self._loop, args=(proc,), daemon=True,
                                 name=str(proc))
            self.threads.append(t)
            t.start()
        finally:
            threading.stack_size(old)

    def _quiescent(self):
        return self.busy == 0 and not any(p.mailbox for p in self.runtime.processes)

    def _loop(self, proc):
        rt = self.runtime
        while True:
            with self.cond:
                while not proc.mailbox and not self.done:
                    self.cond.wait(0.05)
                if self.done:
                    return
                if rt.stopped():
                    self.done = True
                    self.cond.notify_all()
                    return
                self.busy += 1
            try:
                rt.execute(proc)
            finally:
                with self.cond:
                    self.busy -= 1
                    if rt.stopped() or self._quiescent():
                        self.done = True
                    self.cond.notify_all()

    def run(self):
        for proc in list(self.runtime.processes):
            self._start(proc)
        with self.cond:
            while not self.done:
                if self._quiescent() or self.runtime.stopped():
                    self.done = True
                    break
                self.cond.wait(0.05)
            self.cond.notify_all()
        for t in list(self.threads):
            t.join(timeout=5)


SCHEDULERS = {"deterministic": DeterministicScheduler, "concurrent": ConcurrentScheduler}


# -- the system ----------------------------------------------------------------

class Runtime:
    """All processes of one program run.

    ``out``/``err`` receive program output and diagnostics; ``max_turns``
    of 0 means unbounded.
    """

    def __init__(self, program: Program, scheduler="deterministic", seed=None,
                 max_turns=0, trace_propagation=False, trace_sct=False,
                 out=None, err=None):
        self.program = program
        self.out = out if out is not None else sys.stdout
        self.err = err if err is not None else sys.stderr
        self.lock = threading.RLock()
        self.max_turns = max_turns
        self.turns = 0
        self.processes = []
        self.subscriptions = {}   # token -> (Subscription, producer stream state)
        self.monitors = {}        # token -> handler selector
        self._tokens = 0
        self.stale_drops = 0
        self.effects = {}         # pid -> count of output/send/spawn effects
        self.error = None
        self._rng = random.Random(seed)
        self.sct_trace = self._err_line if trace_sct else None
        self.propagation_trace = self._err_line if trace_propagation else None
        self.scheduler = SCHEDULERS[scheduler](self)

    # -- output --------------------------------------------------------------

    def _err_line(self, text):
        with self.lock:
            self.err.write(text + "\n")
            self.err.flush()

    def write_output(self, proc, text):
        with self.lock:
            self._effect(proc)
            self.out.write(text + "\n")
            self.out.flush()

    def _effect(self, proc):
        if proc is not None:
            self.effects[proc.pid] = self.effects.get(proc.pid, 0) + 1

    def new_random(self):
        with self.lock:
            return random.Random(self._rng.getrandbits(64))

    # -- processes -----------------------------------------------------------

    def process(self, ref):
        proc = self.processes[ref.pid] if 0 <= ref.pid < len(self.processes) else None
        if proc is None or proc.ref != ref:
            raise ArlangRuntimeError(f"no such process {ref!r}")
        return proc

    def find(self, behaviour):
        return [p for p in self.processes if p.behaviour == behaviour]

    def _register(self, proc, sender):
        self.processes.append(proc)
        self.scheduler.on_spawn(proc, sender)

    def deliver(self, proc, msg, sender):
        with self.lock:
            proc.mailbox.put(msg, self.scheduler.stamp(sender))
        if isinstance(self.scheduler, ConcurrentScheduler):
            self.scheduler.notify()

    def spawn_actor(self, behaviour, ctor, args, sender=None, pos=None):
        bdef = self.program.actors.get(behaviour)
        if bdef is None:
            raise UnknownBehaviour(f"unknown actor behaviour {behaviour}", pos)
        if ctor not in bdef.constructors:
            raise UnknownSelector(f"{behaviour} has no constructor {ctor}", pos, ctor)
        with self.lock:
            self._effect(sender)
            proc = ActorProcess(self, len(self.processes), bdef)
            proc.mailbox.put(Message(CONSTRUCT, ctor, copy_args(args), pos=pos),
                             self.scheduler.stamp(sender))
            self._register(proc, sender)
        return proc.ref

    def spawn_reactor(self, behaviour, sender=None, pos=None):
        dag = self.program.dags.get(behaviour)
        if dag is None:
            raise UnknownBehaviour(f"unknown reactor behaviour {behaviour}", pos)
        with self.lock:
            self._effect(sender)
            proc = ReactorProcess(self, len(self.processes), behaviour, dag)
            self._register(proc, sender)
        proc.initialize()
        return proc.ref

    def send(self, sender, target, selector, args, pos=None):
        if isinstance(target, ReactorRef):
            raise ArlangTypeError("reactors do not accept messages; use react-to", pos,
                                  selector)
        if not isinstance(target, ActorRef):
            raise ArlangTypeError(f"send target must be an ActorReference, got "
                                  f"{class_name(target)}", pos, selector)
        proc = self.process(target)
        self._effect(sender)
        self.deliver(proc, Message(INVOKE, selector, copy_args(args),
                                   sender=sender.pid if sender else None, pos=pos), sender)

    def react_to(self, sender, target, args, pos=None):
        proc = self.process(target)
        check_stream_args(args, proc.dag.n_explicit, pos)
        self._effect(sender)
        self.deliver(proc, Message(REBIND, args=copy_args(args),
                                   sender=sender.pid if sender else None, pos=pos), sender)

    # -- streams ---------------------------------------------------------------

    def qualify(self, ref, stream, pos=None):
        proc = self.process(ref)
        state = proc.streams.get(stream)
        if state is None:
            raise StreamError(f"{proc} exports no stream {stream}", pos)
        return StreamRef(ref, stream, state.arity)

    def _state(self, sref):
        state = self.process(sref.owner).streams.get(sref.name)
        if state is None:
            raise StreamError(f"{sref.owner!r} exports no stream {sref.name}")
        return state

    def subscribe(self, sref, subscriber):
        """Register a subscription; returns ``(token, cached last tuple or None)``."""
        with self.lock:
            state = self._state(sref)
            self._tokens += 1
            token = self._tokens
            sub = Subscription(token, subscriber.pid, sref)
            state.subscribers[token] = sub
            self.subscriptions[token] = (sub, state)
            cached = state.last
            return token, (copy_args(cached) if cached is not None else None)

    def unsubscribe(self, token):
        with self.lock:
            entry = self.subscriptions.pop(token, None)
            if entry is not None:
                entry[1].subscribers.pop(token, None)

    def subscription_active(self, sref, token):
        return token in self.subscriptions

    def monitor_selector(self, token):
        return self.monitors[token]

    def monitor(self, subscriber, sref, selector, pos=None):
        token, cached = self.subscribe(sref, subscriber)
        self.monitors[token] = selector
        if cached is not None:
            self.deliver(subscriber, Message(PUBLICATION, args=cached, stream=sref,
                                             token=token, pos=pos), subscriber)

    def publish(self, producer, stream, values):
        with self.lock:
            state = producer.streams[stream]
            state.last = tuple(copy_args(values))
            sref = StreamRef(producer.ref, stream, state.arity)
            subs = list(state.subscribers.values())
        for sub in subs:
            self.deliver(self.processes[sub.subscriber],
                         Message(PUBLICATION, args=copy_args(values), stream=sref,
                                 token=sub.token, sender=producer.pid), producer)

    # -- running ---------------------------------------------------------------

    def stopped(self):
        return self.error is not None or (0 < self.max_turns <= self.turns)

    def execute(self, proc):
        """Process one message of ``proc`` under fail-stop error handling."""
        with self.lock:
            msg = proc.mailbox.get()
        try:
            proc.step(msg)
        except ArlangRuntimeError as exc:
            self._fail(exc, proc, msg)
        except RecursionError:
            exc = ArlangRuntimeError("stack overflow")
            self._fail(exc, proc, msg)
        with self.lock:
            self.turns += 1

    def _fail(self, exc, proc, msg):
        with self.lock:
            if exc.process is None:
                exc.process = str(proc)
            if exc.selector is None and msg is not None:
                exc.selector = msg.selector
            if self.error is None:
                self.error = exc

    def start(self):
        """Spawn ``Main`` and queue its ``start`` constructor."""
        return self.spawn_actor("Main", "start", [])

    def run(self) -> int:
        """Run to quiescence or the turn limit; returns an exit code."""
        def body():
            self.start()
            self.scheduler.run()
        run_with_stack(body)
        if self.error is not None:
            self._err_line(f"error: {self.error}")
            return EXIT_RUNTIME
        return EXIT_OK


def run_source(source, **kwargs) -> int:
    """Load and run program text; load errors give exit code 1."""
    err = kwargs.get("err") or sys.stderr
    try:
        program = load(source)
    except LoadError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_LOAD
    return Runtime(program, **kwargs).run()
