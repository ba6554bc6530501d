import pytest
from hypothesis import given, settings, strategies as st

from arlang.actors import PUBLICATION, Mailbox, Message
from arlang.errors import StreamError
from arlang.values import StreamRef, equals, ref_equals

from conftest import main_with, make_runtime, program_text, run_text

PRODUCER = """
(actor Producer
  (def-stream s 1)
  (def-stream loc 2)
  (def-constructor (init))
  (def-method (go n) (emit s n))
  (def-method (three) (emit s 1) (emit s 2) (emit s 3))
  (def-method (move x y) (emit loc x y)))
"""

PAIR_CLASS = program_text("pair.arl").split("(actor")[0]


def drain(rt, limit=1000):
    """Run the deterministic scheduler inside the big-stack thread."""
    from arlang.runtime import run_with_stack
    rt.max_turns = limit
    run_with_stack(rt.scheduler.run)


def test_hello_world():
    assert run_text(program_text("hello.arl")) == (0, "Hello World!\n", "")


def test_spawn_runs_constructor_first():
    src = """
(actor Wind (def-fields rng) (def-constructor (init) (set! rng 1) (println "init"))
  (def-method (blow) (println "blow")))
""" + main_with("(def w (spawn-actor Wind 'init)) (send w 'blow)")
    assert run_text(src)[1] == "init\nblow\n"


def test_spawn_unknown_constructor():
    src = "(actor W (def-constructor (init)))" + main_with("(spawn-actor W 'nope)")
    code, _, err = run_text(src)
    assert code == 2 and "W has no constructor nope" in err


def test_two_spawns_are_distinct():
    rt = make_runtime("(actor W (def-constructor (init)))" + main_with(
        "(spawn-actor W 'init) (spawn-actor W 'init)"))
    assert rt.run() == 0
    a, b = rt.find("W")
    assert a.ref != b.ref and not ref_equals(a.ref, b.ref)


def test_self_send_is_queued_after_current_turn():
    src = """
(actor Looper (def-fields n)
  (def-constructor (init) (set! n 0))
  (def-method (loop)
    (set! n (+ n 1))
    (send #self 'loop)
    (println "turn " n)))
""" + main_with("(send (spawn-actor Looper 'init) 'loop)")
    code, out, _ = run_text(src, max_turns=6)
    assert code == 0
    assert out.splitlines() == ["turn 1", "turn 2", "turn 3", "turn 4"]


@pytest.mark.parametrize("target, msg", [
    ("1", "send target must be an ActorReference, got Number"),
    ("(spawn-reactor Id)", "reactors do not accept messages"),
])
def test_send_to_non_actor(target, msg):
    src = "(reactor (Id x) (out x))" + main_with(f"(send {target} 'blow)")
    code, _, err = run_text(src)
    assert code == 2 and msg in err


def test_emit_arity_violation():
    src = PRODUCER + main_with("(send (spawn-actor Producer 'init) 'move 1 2 3)")
    code, _, err = run_text(src)
    assert code == 2
    assert "move expects 2 arguments" in err
    src = "(actor P (def-stream s 1) (def-constructor (init) (emit s 1 2)))" + main_with(
        "(spawn-actor P 'init)")
    code, _, err = run_text(src)
    assert code == 2 and "stream s has arity 1, emitted 2 value(s)" in err


def test_emit_undeclared_stream():
    src = "(actor P (def-constructor (init) (emit nope 1)))" + main_with("(spawn-actor P 'init)")
    code, _, err = run_text(src)
    assert code == 2 and "declares no stream nope" in err


def test_emit_without_subscribers_seeds_later_subscriber():
    src = PRODUCER + """
(actor Late
  (def-constructor (init p) (monitor p.s 'got))
  (def-method (got v) (println "seed " v)))
""" + """
(actor Main
  (def-fields p)
  (def-constructor (start)
    (set! p (spawn-actor Producer 'init))
    (send p 'go 17)
    (send #self 'later))
  (def-method (later) (spawn-actor Late 'init p)))
"""
    rt = make_runtime(src)
    assert rt.run() == 0
    assert rt.out.getvalue() == "seed 17\n"
    assert rt.find("Producer")[0].streams["s"].last == (17.0,)


def test_qualification_values():
    rt = make_runtime(PRODUCER + "(reactor (Id x) (out x))" + main_with(
        "(def p (spawn-actor Producer 'init)) (def r (spawn-reactor Id))"))
    assert rt.run() == 0
    p, r = rt.find("Producer")[0].ref, rt.find("Id")[0].ref
    assert rt.qualify(p, "s") == StreamRef(p, "s", 1)
    assert rt.qualify(p, "loc").arity == 2
    assert rt.qualify(r, "out") == StreamRef(r, "out", 1)
    with pytest.raises(StreamError, match="exports no stream gusts"):
        rt.qualify(p, "gusts")


def test_unknown_stream_in_program():
    src = PRODUCER + main_with("(def p (spawn-actor Producer 'init)) (monitor p.gusts 'x)")
    code, _, err = run_text(src)
    assert code == 2 and "exports no stream gusts" in err


def test_wind_monitor_as_written_is_silent():
    assert run_text(program_text("wind_monitor.arl"), seed=1, max_turns=30) == (0, "", "")


def test_wind_monitor_prints_every_emission():
    code, out, _ = run_text(program_text("wind_monitor_blowing.arl"), seed=1, max_turns=30)
    lines = out.splitlines()
    assert code == 0 and len(lines) >= 5
    assert all(line.startswith("the new wind speed is: ") for line in lines)
    speeds = [int(line.rsplit(" ", 1)[1]) for line in lines]
    assert all(0 <= s <= 30 for s in speeds)


def test_monitor_handler_arity_checked_at_delivery():
    src = PRODUCER + """
(actor Main
  (def-constructor (start)
    (def p (spawn-actor Producer 'init))
    (monitor p.loc 'where)
    (send p 'move 1 2))
  (def-method (where x) (println "" x)))
"""
    code, out, err = run_text(src)
    assert code == 2 and out == ""
    assert "handler Main>>where takes 1 parameter(s) but loc delivers 2 value(s)" in err


def test_three_emissions_three_handler_calls_in_order():
    src = PRODUCER + """
(actor Main
  (def-constructor (start)
    (def p (spawn-actor Producer 'init))
    (monitor p.s 'got)
    (send p 'three))
  (def-method (got v) (println "got " v)))
"""
    assert run_text(src)[1] == "got 1\ngot 2\ngot 3\n"


def test_per_sender_fifo():
    sends = " ".join(f"(send e 'show {i})" for i in range(20))
    src = "(actor Echo (def-constructor (init)) (def-method (show n) (println \"\" n)))" + \
        main_with(f"(def e (spawn-actor Echo 'init)) {sends}")
    assert run_text(src)[1].split() == [str(i) for i in range(20)]


def test_isolation_of_sent_pair():
    src = PAIR_CLASS + """
(actor Keeper
  (def-constructor (init))
  (def-method (keep p) (println "received " (first p))))
""" + main_with("""
    (def k (spawn-actor Keeper 'init))
    (def p (new Pair 'initialize-with 1 #undefined))
    (send k 'keep p)
    (set-first! p 99)
    (println "sender sees " (first p))""")
    assert run_text(src)[1] == "sender sees 99\nreceived 1\n"


def test_copied_reference_reaches_same_mailbox():
    src = PAIR_CLASS + """
(actor Echo (def-constructor (init)) (def-method (show n) (println "echo " n)))
(actor Relay
  (def-constructor (init))
  (def-method (relay box) (send (first box) 'show 5)))
""" + main_with("""
    (def e (spawn-actor Echo 'init))
    (def r (spawn-actor Relay 'init))
    (send r 'relay (new Pair 'initialize-with e #undefined))""")
    rt = make_runtime(src)
    assert rt.run() == 0
    assert rt.out.getvalue() == "echo 5\n"
    assert rt.find("Echo")[0].turns == 2


def test_fan_out_publications_are_equal_copies():
    src = PAIR_CLASS + """
(actor Box
  (def-stream s 1)
  (def-constructor (init))
  (def-method (go) (emit s (new Pair 'initialize-with 1 2))))
(actor Sub (def-constructor (init b) (monitor b.s 'got)) (def-method (got v) v))
""" + main_with("""
    (def b (spawn-actor Box 'init))
    (spawn-actor Sub 'init b) (spawn-actor Sub 'init b) (spawn-actor Sub 'init b)""")
    rt = make_runtime(src)
    rt.start()
    drain(rt)  # constructors run, subscriptions registered
    box = rt.find("Box")[0]
    assert len(box.streams["s"].subscribers) == 3
    rt.send(None, box.ref, "go", [])
    rt.execute(box)
    pubs = [p.mailbox.messages() for p in rt.find("Sub")]
    assert [len(m) for m in pubs] == [1, 1, 1]
    payloads = [m[0].args[0] for m in pubs]
    assert all(m[0].kind == PUBLICATION for m in pubs)
    for i, a in enumerate(payloads):
        for b in payloads[i + 1:]:
            assert equals(a, b) and not ref_equals(a, b)


def test_blow_turn_effects_in_order():
    rt = make_runtime(program_text("wind_monitor_blowing.arl"), seed=3)
    log = []
    publish, send, sleep = rt.publish, rt.send, rt.scheduler.sleep
    rt.publish = lambda proc, stream, values: (log.append(("emit", stream)),
                                                publish(proc, stream, values))
    rt.send = lambda s, t, sel, args, pos=None: (log.append(("send", sel)),
                                                  send(s, t, sel, args, pos))
    rt.scheduler.sleep = lambda proc, ms: (log.append(("sleep", ms)), sleep(proc, ms))
    rt.start()
    main = rt.processes[0]
    rt.execute(main)             # constructor: spawn, send blow, monitor
    wind = rt.find("Wind")[0]
    rt.execute(wind)             # init
    log.clear()
    rt.execute(wind)             # blow
    assert log == [("emit", "speed"), ("sleep", 10000), ("send", "blow")]
    assert wind.local_time == 10000
    assert wind.mailbox.head_time() == 10000
    assert main.mailbox.messages()[0].kind == PUBLICATION


def test_main_constructor_turn_effects():
    rt = make_runtime(program_text("turbine.arl"), seed=1)
    rt.start()
    rt.execute(rt.processes[0])
    kinds = [type(p).__name__ for p in rt.processes]
    assert kinds == ["ActorProcess", "ActorProcess", "ReactorProcess"]
    wind, turbine = rt.processes[1], rt.processes[2]
    assert [m.selector for m in wind.mailbox.messages()] == ["init", "blow"]
    assert [m.kind for m in turbine.mailbox.messages()] == ["rebind"]
    assert len(rt.monitors) == 1


def test_idle_processes_are_not_scheduled():
    rt = make_runtime("(actor W (def-constructor (init)))" + main_with("(spawn-actor W 'init)"))
    assert rt.run() == 0
    assert [p.turns for p in rt.processes] == [1, 1]


def test_mailbox_orders_by_time_then_arrival():
    box = Mailbox()
    box.put(Message("invoke", "late"), 5.0)
    box.put(Message("invoke", "a"), 0.0)
    box.put(Message("invoke", "b"), 0.0)
    assert [m.selector for m in box.messages()] == ["a", "b", "late"]
    assert box.get().selector == "a" and len(box) == 2


def test_concurrent_scheduler_runs_to_quiescence():
    src = PRODUCER + """
(actor Main
  (def-constructor (start)
    (def p (spawn-actor Producer 'init))
    (monitor p.s 'got)
    (send p 'three))
  (def-method (got v) (println "got " v)))
"""
    assert run_text(src, scheduler="concurrent") == (0, "got 1\ngot 2\ngot 3\n", "")


def test_arity2_monitor_receives_whole_tuples():
    src = PRODUCER + """
(actor Main
  (def-constructor (start)
    (def p (spawn-actor Producer 'init))
    (monitor p.loc 'where)
    (send p 'move 1 2) (send p 'move 3 4))
  (def-method (where x y) (println "" x "," y)))
"""
    assert run_text(src)[1] == "1,2\n3,4\n"


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=6), st.integers(-9, 9))
def test_isolation_property(items, clobber):
    build = " ".join(f"(set! l (new Pair 'initialize-with {x} l))" for x in reversed(items))
    src = PAIR_CLASS + """
(actor Keeper
  (def-constructor (init))
  (def-method (keep l) (println "" (first l) " " (length l))))
""" + main_with(f"""
    (def k (spawn-actor Keeper 'init))
    (def l #undefined) {build}
    (send k 'keep l)
    (set-first! l {clobber})
    (set-second! l #undefined)""")
    assert run_text(src)[1] == f"{items[0]} {len(items)}\n"

