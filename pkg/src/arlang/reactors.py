"""Reactor processes and the propagation engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .actors import PUBLICATION, REBIND, Process, StreamState, check_stream_args
from .dag import APPLY, CONST, IMPLICIT, QUALIFY, SINK, SOURCE, Dag
from .errors import ArityError, ArlangRuntimeError, ArlangTypeError
from .values import ActorRef, ReactorRef, StreamRef, class_name, equals, format_value


@dataclass
class TurnReport:
    """What one propagation turn did; kept for tracing and audits."""

    reactor: str
    changed: list                       # [(node id, label, value or None if unset)]
    recomputed: list = field(default_factory=list)
    emitted: Optional[tuple] = None

    def render(self) -> str:
        changed = " ".join(f"{label}={'<unset>' if v is None else format_value(v[0])}"
                           for _, label, v in self.changed)
        nodes = " ".join(f"n{i}" for i in self.recomputed) or "-"
        out = ("(" + " ".join(format_value(v) for v in self.emitted) + ")"
               if self.emitted is not None else "(no emission)")
        return f"[propagate] {self.reactor} changed: {changed} recomputed: {nodes} -> {out}"


class Deployment:
    """Run-time instance of a DAG: one value slot and set-flag per node."""

    def __init__(self, dag: Dag):
        self.dag = dag
        n = len(dag.nodes)
        self.values = [None] * n
        self.is_set = [False] * n
        for node in dag.nodes:
            if node.kind == CONST:
                self.values[node.id] = node.value
                self.is_set[node.id] = True
        self.subscriptions = {}  # qualify node id -> token
        self.owners = {}         # qualify node id -> owner currently subscribed

    def sink_values(self):
        return tuple(self.values[s] for s in self.dag.sinks)

    def sinks_set(self):
        return all(self.is_set[s] for s in self.dag.sinks)


class ReactorProcess(Process):
    kind = "reactor"

    def __init__(self, runtime, pid, name, dag: Dag):
        super().__init__(runtime, pid, name)
        self.dag = dag
        self.root = Deployment(dag)
        self._ref = ReactorRef(pid, name)
        self.streams = {"out": StreamState(len(dag.sinks))}
        self.last_emitted = None
        # token -> ("group", first source index, width) | ("qualify", node id)
        self.targets = {}
        self.group_tokens = {}   # (first, width) -> token
        self.stale_drops = 0
        self.reports = []
        self.recompute_counts = [0] * len(dag.nodes)

    @property
    def ref(self):
        return self._ref

    @property
    def out_arity(self):
        return len(self.dag.sinks)

    # pure processes: effects never reach the host because the evaluator
    # rejects them in dag-apply activations, but refuse defensively
    def _refuse(self, what, pos=None):
        raise ArlangRuntimeError(f"{what} attempted inside reactor {self}", pos)

    def output(self, text):
        self._refuse("output")

    def send(self, target, selector, args, pos=None):
        self._refuse("send", pos)

    def spawn_actor(self, behaviour, ctor, args, pos=None):
        self._refuse("spawn-actor", pos)

    def spawn_reactor(self, behaviour, pos=None):
        self._refuse("spawn-reactor", pos)

    def monitor(self, sref, selector, pos=None):
        self._refuse("monitor", pos)

    def react_to(self, target, args, pos=None):
        self._refuse("react-to", pos)

    def sleep(self, ms):
        self._refuse("sleep")

    # -- lifecycle -----------------------------------------------------------

    def initialize(self):
        """Compute whatever depends only on constants (const sinks, const owners)."""
        consts = {n.id for n in self.dag.nodes if n.kind == CONST}
        if consts:
            self.propagate({}, seeds=consts, emit=False)

    def handle(self, msg):
        if msg.kind == REBIND:
            self.rebind(msg.args, msg.pos)
        elif msg.kind == PUBLICATION:
            self.handle_publication(msg)
        else:
            raise ArlangRuntimeError(f"reactors cannot process {msg.kind} messages")

    # -- sources -------------------------------------------------------------

    def rebind(self, args, pos=None):
        """Apply a react-to: scalars set sources, streams (re)subscribe groups."""
        dag = self.dag
        check_stream_args(args, dag.n_explicit, pos)
        changes = {}
        index = 0
        for arg in args:
            width = arg.arity if isinstance(arg, StreamRef) else 1
            self._cancel_overlapping(index, width)
            covered = dag.explicit_sources[index:index + width]
            if isinstance(arg, StreamRef):
                token, cached = self.runtime.subscribe(arg, self)
                self.targets[token] = ("group", index, width)
                self.group_tokens[(index, width)] = token
                for j, node in enumerate(covered):
                    changes[node] = (cached[j],) if cached is not None else None
            else:
                changes[covered[0]] = (arg,)
            index += width
        self.propagate(changes)

    def _cancel_overlapping(self, first, width):
        for (start, w), token in list(self.group_tokens.items()):
            if start < first + width and first < start + w:
                del self.group_tokens[(start, w)]
                self._unsubscribe(token)

    def _unsubscribe(self, token):
        self.targets.pop(token, None)
        self.runtime.unsubscribe(token)

    def handle_publication(self, msg):
        target = self.targets.get(msg.token)
        if target is None:
            self.stale_drops += 1
            self.runtime.stale_drops += 1
            return
        if target[0] == "group":
            _, first, width = target
            nodes = self.dag.explicit_sources[first:first + width]
            self.propagate({n: (v,) for n, v in zip(nodes, msg.args)})
        else:
            implicit = self.dag.nodes[target[1]].pair
            self.propagate({implicit: (msg.args[0],)})

    # -- propagation -----------------------------------------------------------

    def propagate(self, changes, seeds=(), emit=True):
        """One glitch-free turn.

        ``changes`` maps source node ids to ``(value,)`` or ``None`` (unset).
        Nodes are swept once in rank order; a node recomputes iff one of its
        inputs changed this turn and all of its inputs are set.  A node with
        an unset input becomes unset itself, so stale values never mix with
        fresh ones in an emitted tuple.
        """
        dep = self.root
        dag = self.dag
        report = TurnReport(str(self), [])
        changed = set(seeds)
        for node_id, value in changes.items():
            report.changed.append((node_id, dag.nodes[node_id].label, value))
            self._set(node_id, value, changed)

        for node_id in dag.order:
            node = dag.nodes[node_id]
            if node.kind in (SOURCE, CONST, IMPLICIT):
                continue
            if not any(i in changed for i in node.inputs):
                continue
            if not all(dep.is_set[i] for i in node.inputs):
                if dep.is_set[node_id]:
                    dep.is_set[node_id] = False
                    dep.values[node_id] = None
                    changed.add(node_id)
                if node.kind == QUALIFY:
                    self._drop_qualification(node, changed)
                continue
            report.recomputed.append(node_id)
            self.recompute_counts[node_id] += 1
            if node.kind == APPLY:
                args = [dep.values[i] for i in node.inputs]
                self.guard.reset()
                value = self.evaluator.apply(args[0], node.label, args[1:])
            elif node.kind == SINK:
                value = dep.values[node.inputs[0]]
            else:
                self._requalify(node, changed)
                continue
            dep.values[node_id] = value
            dep.is_set[node_id] = True
            changed.add(node_id)

        if emit and dep.sinks_set():
            tup = dep.sink_values()
            if self.last_emitted is None or not all(
                    equals(a, b) for a, b in zip(tup, self.last_emitted)):
                self.last_emitted = tup
                report.emitted = tup
                self.runtime.publish(self, "out", list(tup))
        if emit:
            self.reports.append(report)
            if self.runtime.propagation_trace is not None:
                self.runtime.propagation_trace(report.render())
        return report

    def _set(self, node_id, value, changed):
        dep = self.root
        if value is None:
            dep.values[node_id] = None
            dep.is_set[node_id] = False
        else:
            dep.values[node_id] = value[0]
            dep.is_set[node_id] = True
        changed.add(node_id)

    def _requalify(self, node, changed):
        """A qualify node saw a new owner: move its subscription."""
        dep = self.root
        owner = dep.values[node.inputs[0]]
        if not isinstance(owner, (ActorRef, ReactorRef)):
            raise ArlangTypeError(f"qualification .{node.label} needs an actor or reactor "
                                  f"reference, got {class_name(owner)}")
        if node.id in dep.owners and dep.owners[node.id] == owner:
            return
        sref = self.runtime.qualify(owner, node.label)
        if sref.arity != 1:
            raise ArityError(f"qualified stream {node.label} has arity {sref.arity}; "
                             f"reactor qualifications need arity 1")
        self._drop_qualification(node, changed, keep_implicit=True)
        token, cached = self.runtime.subscribe(sref, self)
        self.targets[token] = ("qualify", node.id)
        dep.subscriptions[node.id] = token
        dep.owners[node.id] = owner
        dep.values[node.id] = owner
        dep.is_set[node.id] = True
        self._set(node.pair, (cached[0],) if cached is not None else None, changed)

    def _drop_qualification(self, node, changed, keep_implicit=False):
        dep = self.root
        token = dep.subscriptions.pop(node.id, None)
        dep.owners.pop(node.id, None)
        if token is not None:
            self._unsubscribe(token)
        if not keep_implicit and dep.is_set[node.pair]:
            self._set(node.pair, None, changed)
