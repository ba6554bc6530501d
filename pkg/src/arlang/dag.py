"""Compilation of reactor behaviours to DAGs.

Node variants:

``source``    explicit source, one per behaviour parameter
``implicit``  implicit source fed by a qualification's subscription
``const``     value computed at compile time
``apply``     routine invocation; input slot 0 is the receiver
``qualify``   tracks the owner of a qualified stream, paired with an implicit source
``sink``      output; exactly one input

Node ids are topologically ordered: every input id is smaller than the id
of its consumer.  That makes copying a DAG into another (``tick``/``ror``)
a single forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from . import syntax as S
from .errors import ArlangRuntimeError, CompileError
from .evaluator import Activation, Evaluator, Scope
from .values import UNDEFINED, Symbol

SOURCE, IMPLICIT, CONST, APPLY, QUALIFY, SINK = (
    "source", "implicit", "const", "apply", "qualify", "sink")


@dataclass
class Node:
    id: int
    kind: str
    label: str
    inputs: list = field(default_factory=list)
    value: object = None
    pair: Optional[int] = None  # qualify <-> implicit


@dataclass
class Dag:
    name: str
    nodes: list
    sources: list       # explicit ids in parameter order, then implicit ids
    n_explicit: int
    sinks: list
    heights: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    consumers: list = field(default_factory=list)
    order: list = field(default_factory=list)

    @property
    def explicit_sources(self):
        return self.sources[:self.n_explicit]

    @property
    def implicit_sources(self):
        return self.sources[self.n_explicit:]

    def edges(self):
        """``(producer, consumer, slot)`` triples."""
        return [(src, n.id, slot) for n in self.nodes for slot, src in enumerate(n.inputs)]

    def count(self, kind) -> int:
        return sum(1 for n in self.nodes if n.kind == kind)

    def dump(self) -> str:
        return dump_dag(self)


# -- building ----------------------------------------------------------------

class _Const:
    """A compile-time value not yet placed in the graph.

    Named defs share one cell, so every use of a constant def reads the
    same node once it is materialized.
    """

    __slots__ = ("value", "node")

    def __init__(self, value):
        self.value = value
        self.node = None


class _Builder:
    def __init__(self, name):
        self.name = name
        self.nodes = []
        self.explicit = []
        self.implicit = []
        self.sinks = []

    def add(self, kind, label, inputs=(), value=None, pair=None) -> int:
        node = Node(len(self.nodes), kind, label, list(inputs), value, pair)
        self.nodes.append(node)
        if kind == SOURCE:
            self.explicit.append(node.id)
        elif kind == IMPLICIT:
            self.implicit.append(node.id)
        elif kind == SINK:
            self.sinks.append(node.id)
        return node.id

    def node(self, operand) -> int:
        if isinstance(operand, _Const):
            if operand.node is None:
                operand.node = self.add(CONST, format_const(operand.value), value=operand.value)
            return operand.node
        return operand


def format_const(v) -> str:
    if isinstance(v, float) or v is UNDEFINED or isinstance(v, (bool, Symbol, str)):
        return S._lit(v)
    return repr(v)


class Compiler:
    """Compiles every reactor behaviour of a program, resolving tick/ror on demand."""

    def __init__(self, reactors, classes):
        self.reactors = reactors
        self.classes = classes
        self.dags = {}
        self._active = []
        self._folder = Evaluator(classes)

    def compile_all(self) -> dict:
        for name in self.reactors:
            self.get(name)
        return self.dags

    def get(self, name, pos=None) -> Dag:
        if name in self.dags:
            return self.dags[name]
        rdef = self.reactors.get(name)
        if rdef is None:
            raise CompileError(f"unknown reactor behaviour {name}", pos)
        if name in self._active:
            cycle = " -> ".join(self._active[self._active.index(name):] + [name])
            raise CompileError(f"recursive behaviour composition {cycle}", rdef.pos)
        self._active.append(name)
        try:
            if rdef.ror is not None:
                dag = self.compose_ror(name, rdef.ror.out, rdef.ror.inputs, rdef.ror.pos)
            else:
                dag = self.compile_behaviour(rdef)
        finally:
            self._active.pop()
        self.dags[name] = dag
        return dag

    # -- constant folding ---------------------------------------------------

    def evaluate_constant(self, expr, consts, pos=None):
        act = Activation("dag-apply", "<const>", None, scope=Scope(dict(consts)))
        self._folder.guard.reset()
        try:
            return self._folder.eval(expr, act)
        except ArlangRuntimeError as err:
            raise CompileError(f"constant folding failed: {err}", pos or expr.pos) from err

    def apply_constant(self, selector, values, pos=None):
        self._folder.guard.reset()
        try:
            return self._folder.apply(values[0], selector, values[1:], pos)
        except ArlangRuntimeError as err:
            raise CompileError(f"constant folding failed: {err}", pos) from err

    # -- behaviours ---------------------------------------------------------

    def compile_behaviour(self, rdef) -> Dag:
        if not rdef.params:
            raise CompileError(f"reactor {rdef.name} needs at least one source", rdef.pos)
        if not rdef.outs:
            raise CompileError(f"reactor {rdef.name} needs an out form with at least one sink",
                               rdef.pos)
        b = _Builder(rdef.name)
        env = {p: b.add(SOURCE, p) for p in rdef.params}
        for form in rdef.body:
            if isinstance(form, S.Def):
                self._bind(env, form.name, form.pos)
                env[form.name] = self.expr(b, env, form.value)
            elif isinstance(form, S.DefValues):
                if not isinstance(form.value, S.Tick):
                    raise CompileError("def-values expects a tick expression", form.pos)
                results = self.tick(b, env, form.value)
                if len(results) != len(form.names):
                    raise CompileError(
                        f"def-values binds {len(form.names)} names but {form.value.behaviour} "
                        f"has {len(results)} sinks", form.pos)
                for name in form.names:
                    self._bind(env, name, form.pos)
                env.update(zip(form.names, results))
            else:
                self.expr(b, env, form)
        for i, out in enumerate(rdef.outs, 1):
            b.add(SINK, str(i), [b.node(self.expr(b, env, out))])
        return self.finish(b)

    def _bind(self, env, name, pos):
        if name in env:
            raise CompileError(f"{name} is already bound in this reactor", pos)

    def expr(self, b, env, e):
        """Compile ``e``; returns a node id or a pending :class:`_Const`."""
        if isinstance(e, S.Var):
            if e.name not in env:
                raise CompileError(f"unbound identifier {e.name}", e.pos)
            return env[e.name]
        if isinstance(e, S.Literal):
            return _Const(e.value)
        if isinstance(e, S.SelfRef):
            raise CompileError("#self is not available in reactors", e.pos)
        consts = self._constant_env(env, e)
        if consts is not None:
            return _Const(self.evaluate_constant(e, consts))
        if isinstance(e, S.Qualification):
            return self.qualification(b, env, e)
        if isinstance(e, S.Invoke):
            ops = [self.expr(b, env, e.receiver)] + [self.expr(b, env, a) for a in e.args]
            return b.add(APPLY, e.selector, [b.node(o) for o in ops])
        if isinstance(e, S.Tick):
            results = self.tick(b, env, e)
            if len(results) != 1:
                raise CompileError(f"{e.behaviour} has {len(results)} sinks; bind them "
                                   f"with def-values", e.pos)
            return results[0]
        if isinstance(e, (S.Def, S.DefValues)):
            raise CompileError("definitions are only allowed at the top of a reactor body",
                               e.pos)
        raise CompileError(f"{type(e).__name__.lower()} over reactive values cannot be "
                           f"compiled to a DAG; move it into a routine", e.pos)

    def _constant_env(self, env, e):
        """Values of the defs ``e`` reads, or None if ``e`` depends on a source."""
        consts = {}
        for sub in S.walk(e):
            if isinstance(sub, (S.Qualification, S.Tick, S.SelfRef)):
                return None
            if isinstance(sub, S.Var):
                bound = env.get(sub.name)
                if not isinstance(bound, _Const):
                    return None
                consts[sub.name] = bound.value
        return consts

    def qualification(self, b, env, e):
        if e.owner not in env:
            raise CompileError(f"unbound identifier {e.owner}", e.pos)
        owner = b.node(env[e.owner])
        q = b.add(QUALIFY, e.stream, [owner])
        imp = b.add(IMPLICIT, f"{e.owner}.{e.stream}", pair=q)
        b.nodes[q].pair = imp
        return imp

    def tick(self, b, env, e):
        callee = self.get(e.behaviour, e.pos)
        args = [self.expr(b, env, a) for a in e.args]
        if len(args) != callee.n_explicit:
            raise CompileError(f"tick {e.behaviour} passes {len(args)} arguments to "
                               f"{callee.n_explicit} sources", e.pos)
        return inline(b, callee, [b.node(a) for a in args])

    def compose_ror(self, name, out_name, input_names, pos=None) -> Dag:
        out = self.get(out_name, pos)
        inputs = [self.get(n, pos) for n in input_names]
        width = sum(len(d.sinks) for d in inputs)
        if width != out.n_explicit:
            raise CompileError(
                f"ror {out_name}: inputs provide {width} sinks but {out_name} has "
                f"{out.n_explicit} sources", pos)
        b = _Builder(name)
        feeds = [[b.add(SOURCE, d.nodes[s].label) for s in d.explicit_sources] for d in inputs]
        results = []
        for d, args in zip(inputs, feeds):
            results.extend(inline(b, d, args))
        for i, r in enumerate(inline(b, out, results), 1):
            b.add(SINK, str(i), [r])
        return self.finish(b)

    # -- finishing ----------------------------------------------------------

    def finish(self, b: _Builder) -> Dag:
        self._fold_applies(b)
        return finalize(b)

    def _fold_applies(self, b):
        # composition can leave applies whose inputs all became constants
        for n in b.nodes:
            if n.kind == APPLY and all(b.nodes[i].kind == CONST for i in n.inputs):
                value = self.apply_constant(n.label, [b.nodes[i].value for i in n.inputs])
                n.kind, n.label, n.value, n.inputs = CONST, format_const(value), value, []


def inline(b: _Builder, callee: Dag, args) -> list:
    """Copy ``callee`` into ``b`` with its explicit sources replaced by ``args``.

    Returns the producers of the callee's sinks, in sink order.  The
    callee's own source and sink nodes do not survive the copy.
    """
    position = {s: i for i, s in enumerate(callee.explicit_sources)}
    mapping = {}
    for n in callee.nodes:
        if n.kind == SOURCE:
            mapping[n.id] = args[position[n.id]]
        elif n.kind == SINK:
            mapping[n.id] = mapping[n.inputs[0]]
        elif n.kind == IMPLICIT:
            q = mapping[n.pair]
            mapping[n.id] = b.add(IMPLICIT, n.label, pair=q)
            b.nodes[q].pair = mapping[n.id]
        else:
            mapping[n.id] = b.add(n.kind, n.label, [mapping[i] for i in n.inputs], n.value)
    return [mapping[s] for s in callee.sinks]


def finalize(b: _Builder) -> Dag:
    nodes = b.nodes
    used = {i for n in nodes for i in n.inputs}
    keep = [n for n in nodes if not (n.kind == CONST and n.id not in used)]
    renum = {n.id: new for new, n in enumerate(keep)}
    fresh = []
    for n in keep:
        fresh.append(Node(renum[n.id], n.kind, n.label, [renum[i] for i in n.inputs],
                          n.value, renum.get(n.pair) if n.pair is not None else None))
    dag = Dag(b.name, fresh, [renum[i] for i in b.explicit + b.implicit], len(b.explicit),
              [renum[i] for i in b.sinks])
    _annotate(dag)
    validate(dag)
    return dag


def _annotate(dag: Dag):
    n = len(dag.nodes)
    dag.heights = [0] * n
    dag.ranks = [0] * n
    dag.consumers = [[] for _ in range(n)]
    for node in dag.nodes:
        for slot, src in enumerate(node.inputs):
            dag.consumers[src].append((node.id, slot))
        if node.inputs:
            dag.heights[node.id] = 1 + max(dag.heights[i] for i in node.inputs)
            dag.ranks[node.id] = 1 + max(dag.ranks[i] for i in node.inputs)
        elif node.kind == IMPLICIT:
            # an implicit source can be seeded by its qualify node mid-turn, so
            # it is swept after it even though its height is 0
            dag.ranks[node.id] = dag.ranks[node.pair] + 1
    dag.order = sorted(range(n), key=lambda i: (dag.ranks[i], i))


def validate(dag: Dag):
    graph = {n.id: set(n.inputs) for n in dag.nodes}
    for n in dag.nodes:
        if n.kind == IMPLICIT:
            graph[n.id].add(n.pair)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as err:
        raise CompileError(f"reactor {dag.name} compiles to a cyclic graph") from err
    for n in dag.nodes:
        if n.kind in (SOURCE, IMPLICIT, CONST) and n.inputs:
            raise CompileError(f"{n.kind} node n{n.id} has producers")
        if n.kind == SINK and (len(n.inputs) != 1 or dag.consumers[n.id]):
            raise CompileError(f"sink node n{n.id} is not at the boundary")
        for i in n.inputs:
            if dag.heights[i] >= dag.heights[n.id]:
                raise CompileError(f"height does not increase along n{i} -> n{n.id}")


def dump_dag(dag: Dag) -> str:
    lines = [f"reactor {dag.name}: {len(dag.nodes)} nodes, {dag.n_explicit} sources, "
             f"{len(dag.implicit_sources)} implicit, {len(dag.sinks)} sinks"]
    width = max(len(n.label) for n in dag.nodes)
    for n in dag.nodes:
        line = f"  n{n.id:<3} {n.kind:<8} {n.label:<{width}}  h={dag.heights[n.id]}"
        if n.inputs:
            line += "  <- " + " ".join(f"n{i}" for i in n.inputs)
        if n.pair is not None:
            line += f"  ~ n{n.pair}"
        lines.append(line.rstrip())
    return "\n".join(lines) + "\n"


def compile_program(prog) -> dict:
    classes = dict(prog.classes)
    return Compiler(prog.reactors, classes).compile_all()
