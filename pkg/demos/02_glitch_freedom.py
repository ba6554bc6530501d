"""A diamond-shaped reactor never shows a half-updated value.

Both branches depend on ``x`` and meet again in the sink.  A naive push
scheme could compute the sink with one fresh and one stale branch; the
sweep in height order recomputes every node at most once per change.

    python demos/02_glitch_freedom.py
"""

import io

from arlang import load
from arlang.runtime import Runtime

SOURCE = """
(reactor (Diamond x)
  (def doubled (* x 2))
  (def shifted (+ x 1))
  (out (+ doubled shifted)))

(actor Ticker
  (def-stream value 1)
  (def-constructor (init))
  (def-method (tick n) (emit value n)))

(actor Main
  (def-constructor (start)
    (def t (spawn-actor Ticker 'init))
    (def d (spawn-reactor Diamond))
    (react-to d t.value)
    (monitor d.out 'show)
    (send t 'tick 1)
    (send t 'tick 2)
    (send t 'tick 10))
  (def-method (show v) (println "out = " v)))
"""

out, err = io.StringIO(), io.StringIO()
Runtime(load(SOURCE), trace_propagation=True, out=out, err=err).run()
print(out.getvalue(), end="")
print()
print("propagation trace:")
print(err.getvalue(), end="")

# out is always 3x + 1: no intermediate value like 2*new + (old + 1) appears
assert out.getvalue().split() == ["out", "=", "4", "out", "=", "7", "out", "=", "31"]
