import io
import subprocess
import sys

import pytest

from arlang.cli import RunConfig, build_parser, main, run

from conftest import GOLDEN, PROGRAMS


def cli(*args):
    proc = subprocess.run([sys.executable, "-m", "arlang", *map(str, args)],
                          capture_output=True, text=True, timeout=120)
    return proc.returncode, proc.stdout, proc.stderr


def run_config(**kw):
    out, err = io.StringIO(), io.StringIO()
    code = run(RunConfig(**kw), out, err)
    return code, out.getvalue(), err.getvalue()


def test_hello_exit_zero():
    assert cli("run", PROGRAMS / "hello.arl") == (0, "Hello World!\n", "")


def test_circular_list_exit_two():
    code, out, err = cli("run", PROGRAMS / "circular_list.arl")
    assert code == 2 and out == ""
    assert err.startswith("error: termination-violation:")


def test_load_error_exit_one(tmp_path):
    bad = tmp_path / "bad.arl"
    bad.write_text("(class Pair (def-routine (f) (set! x 1)))\n"
                   "(actor Main (def-constructor (start)))")
    code, out, err = cli("run", bad)
    assert (code, out) == (1, "")
    assert err == "error: purity-violation: 'set!' is not allowed in routine Pair>>f at 1:30\n"


def test_missing_file_exit_one(tmp_path):
    code, _, err = run_config(program=str(tmp_path / "none.arl"))
    assert code == 1 and err.startswith("error: cannot read")


def test_turbine_transcript_golden():
    code, out, err = cli("run", PROGRAMS / "turbine.arl", "--seed", 1, "--max-turns", 50)
    assert (code, err) == (0, "")
    assert out == (GOLDEN / "turbine_seed1_turns50.txt").read_text()


def test_deterministic_runs_are_identical():
    path = str(PROGRAMS / "turbine.arl")
    a = run_config(program=path, seed=7, max_turns=80)
    b = run_config(program=path, seed=7, max_turns=80)
    assert a == b and a[1]


@pytest.mark.parametrize("n, m", [(10, 30), (25, 60), (1, 50)])
def test_max_turns_prefix(n, m):
    path = str(PROGRAMS / "turbine.arl")
    short = run_config(program=path, seed=3, max_turns=n)[1]
    long = run_config(program=path, seed=3, max_turns=m)[1]
    assert long.startswith(short)


@pytest.mark.parametrize("name, header", [
    ("WindPower", "reactor WindPower: 12 nodes, 3 sources, 0 implicit, 1 sinks"),
    ("Turbine", "reactor Turbine: 8 nodes, 3 sources, 1 implicit, 3 sinks"),
])
def test_dump_dag_command(name, header):
    code, out, _ = cli("dump-dag", PROGRAMS / "turbine.arl", name)
    assert code == 0 and out.splitlines()[0] == header
    assert out == (GOLDEN / f"dag_{name}.txt").read_text()


def test_dump_dag_identity(tmp_path):
    src = tmp_path / "id.arl"
    src.write_text("(reactor (Id x) (out x)) (actor Main (def-constructor (start)))")
    code, out, _ = run_config(program=str(src), dump_dag="Id")
    assert code == 0
    assert out.splitlines()[1:] == ["  n0   source   x  h=0", "  n1   sink     1  h=1  <- n0"]


def test_dump_dag_unknown_behaviour():
    code, _, err = run_config(program=str(PROGRAMS / "turbine.arl"), dump_dag="Nope")
    assert code == 1 and "unknown reactor behaviour Nope" in err


def test_trace_sct_goes_to_stderr():
    code, out, err = cli("run", PROGRAMS / "pair.arl", "--trace-sct")
    assert (code, out) == (0, "length: 3\n")
    assert err.splitlines() == ["sct Pair>>length (2) vs (3) descends",
                                "sct Pair>>length (1) vs (3) descends",
                                "sct Pair>>length (1) vs (2) descends"]


def test_concurrent_scheduler_flag():
    assert cli("run", PROGRAMS / "hello.arl", "--scheduler", "concurrent") == \
        (0, "Hello World!\n", "")


def test_parser_rejects_negative_turns():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "x.arl", "--max-turns", "-1"])


def test_main_in_process(capsys):
    assert main(["run", str(PROGRAMS / "basic_expressions.arl")]) == 0
    assert capsys.readouterr().out == "no\n"
