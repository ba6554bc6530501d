"""Wind turbine simulator.

A Wind actor emits a random speed every ten virtual seconds.  The turbine
reactor is built from three smaller behaviours and Main prints each power
reading it publishes.  Run from the repository root:

    python demos/01_turbine.py
"""

import io
from pathlib import Path

from arlang import load
from arlang.runtime import Runtime

source = (Path(__file__).resolve().parent.parent / "programs" / "turbine.arl").read_text()
program = load(source)

# Every reactor behaviour compiles to a DAG before anything runs.  The
# composed behaviour keeps the inlined graphs but none of their inner
# sources or sinks.
for name in ("WindPower", "PowerOutput", "Turbine", "TurbinePowerOutput"):
    print(program.dags[name].dump())

# The deterministic scheduler runs on a virtual clock, so a fixed seed and
# turn budget always give the same transcript.
out = io.StringIO()
code = Runtime(program, seed=1, max_turns=50, out=out).run()
print(out.getvalue(), end="")
print(f"exit code {code}")

# The same run, but only the first 20 turns: the transcript is a prefix.
short = io.StringIO()
Runtime(load(source), seed=1, max_turns=20, out=short).run()
assert out.getvalue().startswith(short.getvalue())
print(f"first 20 turns give {len(short.getvalue().splitlines())} of those lines")
