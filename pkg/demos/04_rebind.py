"""Switching a reactor to a different wind while the old one is still blowing.

The turbine is first bound to ``calm``.  It is then rebound to ``gale``,
which has already emitted once.  The turbine picks up gale's last value
right away.  Publications from calm that were still in its mailbox are
discarded instead of being mixed in.

    python demos/04_rebind.py
"""

import io

from arlang import load
from arlang.runtime import Runtime

SOURCE = """
(actor Wind
  (def-stream speed 1)
  (def-constructor (init))
  (def-method (gust n) (emit speed n)))

(reactor (Turbine blade-length wind)
  (out blade-length wind.speed))

(actor Main
  (def-constructor (start)
    (def calm (spawn-actor Wind 'init))
    (def gale (spawn-actor Wind 'init))
    (def t (spawn-reactor Turbine))
    (send gale 'gust 25)
    (react-to t 80 calm)
    (monitor t.out 'show)
    (send calm 'gust 3)
    (react-to t 80 gale)
    (send calm 'gust 4)
    (send gale 'gust 27))
  (def-method (show length speed) (println "wind speed seen by the turbine: " speed)))
"""

out, err = io.StringIO(), io.StringIO()
rt = Runtime(load(SOURCE), trace_propagation=True, out=out, err=err)
rt.run()
print(out.getvalue(), end="")
print(f"stale publications dropped: {rt.stale_drops}")
print()
print(err.getvalue(), end="")
