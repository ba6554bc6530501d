import io
from pathlib import Path

import pytest

from arlang import load
from arlang.runtime import Runtime, run_source, run_with_stack

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def program_text(name):
    return (PROGRAMS / name).read_text()


def run_text(source, **kwargs):
    """Run program text; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    code = run_source(source, out=out, err=err, **kwargs)
    return code, out.getvalue(), err.getvalue()


def make_runtime(source, **kwargs):
    out, err = io.StringIO(), io.StringIO()
    rt = Runtime(load(source), out=out, err=err, **kwargs)
    return rt


def main_with(body, extra=""):
    """Wrap constructor statements in a Main actor."""
    return f"{extra}\n(actor Main (def-constructor (start) {body}))"


@pytest.fixture
def big_stack():
    return run_with_stack


class Recorder:
    """Evaluator host that records effects instead of performing them."""

    self_ref = None

    def __init__(self):
        self.lines = []
        self.effects = []

    def output(self, text):
        self.lines.append(text)
        self.effects.append(("output", text))

    def sleep(self, ms):
        self.effects.append(("sleep", ms))

    def new_random(self):
        import random
        return random.Random(0)


def evaluator_for(source, host=None):
    """Evaluator over the classes of ``source`` plus a method-context activation."""
    from arlang.evaluator import Activation, Evaluator
    prog = load(source)
    ev = Evaluator(prog.classes, host if host is not None else Recorder())
    return ev, Activation("method", "Main", "test")


def pair_list(ev, act, items):
    """Build a proper cdr-linked Pair list from Python numbers."""
    from arlang.values import UNDEFINED
    tail = UNDEFINED
    for x in reversed(items):
        tail = ev.instantiate("Pair", "initialize-with", [float(x), tail], act)
    return tail


# acceptance criteria report one line each at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
