"""Routines are checked for termination while they run.

Each routine call records the sizes of its receiver and arguments.  A
recursive call to the same routine must shrink at least one of them
against every active call, otherwise the program stops with a
termination violation.

    python demos/03_termination.py
"""

import io
from pathlib import Path

from arlang import load, run_source
from arlang.runtime import Runtime

programs = Path(__file__).resolve().parent.parent / "programs"

# A proper three-element list: sizes 3, 2, 1 shrink, so length is accepted.
err = io.StringIO()
Runtime(load((programs / "pair.arl").read_text()), trace_sct=True, err=err).run()
print(err.getvalue(), end="")

# A pair whose cdr is itself: the size stays 1, so the second call is refused.
err = io.StringIO()
code = run_source((programs / "circular_list.arl").read_text(), err=err)
print(err.getvalue(), end="")
print(f"exit code {code}")

# Numbers shrink only by whole units, so halving a real forever is refused too.
HALVE = """
(class M
  (def-routine (halve me x) (if (< x 0.001) 0 (halve me me (/ x 2)))))
(actor Main (def-constructor (start) (halve (new M) (new M) 100)))
"""
err = io.StringIO()
run_source(HALVE, err=err)
print(err.getvalue(), end="")
