"""Run-time size-change guard for routine calls.

Each process owns one :class:`Guard`.  Entering a routine pushes a frame
holding the sizes of the receiver and the arguments; the entry is allowed
only if, against every active frame of the same class and selector, at
least one position strictly descends.  Numbers descend only by whole
units (floors are compared), so ``x -> x/2`` chains cannot pass forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import TerminationViolation, fmt_sizes
from .values import size


@dataclass(frozen=True)
class GuardFrame:
    class_name: str
    selector: str
    sizes: tuple


def _measure(sizes) -> tuple:
    return tuple(math.floor(s) if math.isfinite(s) else math.inf for s in sizes)


def descends(entering, ancestor) -> bool:
    """True if some position of ``entering`` is strictly below ``ancestor``."""
    return any(a < b for a, b in zip(_measure(entering), _measure(ancestor)))


def frame_for(class_name, selector, receiver, args) -> GuardFrame:
    return GuardFrame(class_name, selector, tuple(size(v) for v in [receiver, *args]))


class Guard:
    """Stack of active routine frames for one process."""

    def __init__(self, trace=None):
        self.stack = []
        # frames bucketed by (class, selector) so checks are O(matching depth)
        self._active = {}
        self.trace = trace
        self.comparisons = 0

    def enter(self, frame: GuardFrame, pos=None):
        key = (frame.class_name, frame.selector)
        for ancestor in self._active.get(key, ()):
            self.comparisons += 1
            ok = descends(frame.sizes, ancestor.sizes)
            if self.trace is not None:
                self.trace(f"sct {frame.class_name}>>{frame.selector} "
                           f"{fmt_sizes(frame.sizes)} vs {fmt_sizes(ancestor.sizes)} "
                           f"{'descends' if ok else 'VIOLATION'}")
            if not ok:
                raise TerminationViolation(frame.class_name, frame.selector,
                                           frame.sizes, ancestor.sizes, pos)
        self.stack.append(frame)
        self._active.setdefault(key, []).append(frame)

    def exit(self):
        frame = self.stack.pop()
        bucket = self._active[(frame.class_name, frame.selector)]
        bucket.pop()
        if not bucket:
            del self._active[(frame.class_name, frame.selector)]

    def reset(self):
        self.stack.clear()
        self._active.clear()

    def __len__(self):
        return len(self.stack)
