import pytest
from hypothesis import given, strategies as st

from arlang.errors import TerminationViolation
from arlang.termination import Guard, GuardFrame, descends

from conftest import main_with, program_text, run_text

# Recursive routines need a receiver; `me` is passed along explicitly.
MATH = """
(class M
  (def-routine (fact me n)
    (if (<= n 0) 1 (* n (fact me me (- n 1)))))
  (def-routine (same me n) (same me me n))
  (def-routine (swap me a b) (swap me me b a))
  (def-routine (halve me x)
    (if (< x 0.001) 0 (halve me me (/ x 2)))))
"""


def run_math(body):
    return run_text(main_with(f"(def m (new M)) {body}", MATH))


def frame(*sizes):
    return GuardFrame("C", "r", tuple(float(s) for s in sizes))


def test_descends_is_existential():
    assert descends((1, 5), (2, 0))
    assert not descends((2, 5), (2, 5))
    assert not descends((1.5,), (1.9,))  # same whole unit


def test_guard_accepts_descending_chain():
    g = Guard()
    for n in (5, 4, 3, 2, 1, 0):
        g.enter(frame(n))
    assert len(g) == 6
    assert g.comparisons == 15


def test_guard_rejects_repeat():
    g = Guard()
    g.enter(frame(1))
    with pytest.raises(TerminationViolation) as info:
        g.enter(frame(1))
    assert info.value.entering == (1.0,) and info.value.ancestor == (1.0,)


def test_guard_ignores_other_selectors():
    g = Guard()
    g.enter(GuardFrame("C", "a", (1.0,)))
    g.enter(GuardFrame("C", "b", (1.0,)))
    g.enter(GuardFrame("D", "a", (1.0,)))
    assert g.comparisons == 0


def test_guard_exit_forgets_frames():
    g = Guard()
    g.enter(frame(3))
    g.exit()
    g.enter(frame(3))
    assert len(g) == 1


def test_guard_trace_lines():
    lines = []
    g = Guard(trace=lines.append)
    g.enter(frame(2))
    g.enter(frame(1))
    with pytest.raises(TerminationViolation):
        g.enter(frame(1))
    assert lines == ["sct C>>r (1) vs (2) descends",
                     "sct C>>r (1) vs (2) descends",
                     "sct C>>r (1) vs (1) VIOLATION"]


def test_circular_list_rejected():
    code, out, err = run_text(program_text("circular_list.arl"))
    assert code == 2 and out == ""
    assert err.startswith("error: termination-violation: Pair>>length")


def test_proper_list_length():
    code, out, _ = run_text(program_text("pair.arl"))
    assert (code, out) == (0, "length: 3\n")


def test_factorial_5():
    assert run_math('(println "" (fact m m 5))')[:2] == (0, "120\n")


def test_factorial_depth_1000():
    code, out, err = run_math('(println "" (< 0 (fact m m 1000)))')
    assert (code, out, err) == (0, "#true\n", "")


def test_length_1000():
    build = "(def l #undefined) " + "(set! l (new Pair 'initialize-with 0 l)) " * 1000
    src = main_with(build + '(println "" (length l))', program_text("pair.arl").split("(actor")[0])
    assert run_text(src)[:2] == (0, "1000\n")


@pytest.mark.parametrize("call", ["(same m m 4)", "(swap m m 1 2)", "(halve m m 100)"])
def test_non_descending_recursion_rejected(call):
    code, _, err = run_math(call)
    assert code == 2
    assert "termination-violation" in err


def test_real_halving_stops_at_whole_units():
    # 100, 50, 25, 12.5, 6.25, 3.125, 1.5625, 0.78125, 0.390625: floors stall at 0
    _, _, err = run_math("(halve m m 100)")
    assert "(1 1 0.390625) which do not descend below active call (1 1 0.78125)" in err


def test_no_false_alarm_without_recursion():
    assert run_math('(println "" (fact m m 3) (fact m m 3))')[:2] == (0, "66\n")


@given(st.lists(st.integers(0, 50), min_size=1, max_size=20, unique=True))
def test_strictly_decreasing_sequences_pass(ns):
    g = Guard()
    for n in sorted(ns, reverse=True):
        g.enter(frame(n, 7))


@given(st.lists(st.integers(0, 20), min_size=2, max_size=40))
def test_no_infinite_chain(ns):
    # any accepted chain must be strictly decreasing somewhere against every
    # ancestor, so a repeated tuple can never be accepted
    g = Guard()
    accepted = []
    for n in ns:
        try:
            g.enter(frame(n))
        except TerminationViolation:
            break
        accepted.append(n)
    assert accepted == sorted(set(accepted), reverse=True)
