"""``arlang`` command line.

    arlang run FILE [--scheduler M] [--seed N] [--max-turns N]
                    [--trace-propagation] [--trace-sct] [--dump-dag BEHAVIOUR]
    arlang dump-dag FILE BEHAVIOUR

Exit codes: 0 success, 1 load/compile error, 2 run-time error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Optional

from .errors import LoadError
from .runtime import EXIT_LOAD, EXIT_OK, Runtime, load_file


@dataclass
class RunConfig:
    program: str
    scheduler: str = "deterministic"
    seed: Optional[int] = None
    max_turns: int = 0
    trace_propagation: bool = False
    trace_sct: bool = False
    dump_dag: Optional[str] = None


def _load(path, err):
    try:
        return load_file(path)
    except LoadError as exc:
        err.write(f"error: {exc}\n")
    except OSError as exc:
        err.write(f"error: cannot read {path}: {exc.strerror}\n")
    return None


def dump_dag(config: RunConfig, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    program = _load(config.program, err)
    if program is None:
        return EXIT_LOAD
    dag = program.dags.get(config.dump_dag)
    if dag is None:
        err.write(f"error: unknown reactor behaviour {config.dump_dag}\n")
        return EXIT_LOAD
    out.write(dag.dump())
    return EXIT_OK


def run(config: RunConfig, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    if config.dump_dag:
        return dump_dag(config, out, err)
    program = _load(config.program, err)
    if program is None:
        return EXIT_LOAD
    rt = Runtime(program, scheduler=config.scheduler, seed=config.seed,
                 max_turns=config.max_turns, trace_propagation=config.trace_propagation,
                 trace_sct=config.trace_sct, out=out, err=err)
    return rt.run()


def _non_negative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="arlang", description="Actor-Reactor language runtime")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a program")
    p_run.add_argument("file")
    p_run.add_argument("--scheduler", choices=("deterministic", "concurrent"),
                       default="deterministic")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--max-turns", type=_non_negative, default=0,
                       help="stop after N turns (0 = unbounded)")
    p_run.add_argument("--trace-propagation", action="store_true")
    p_run.add_argument("--trace-sct", action="store_true")
    p_run.add_argument("--dump-dag", metavar="BEHAVIOUR", default=None,
                       help="print the compiled DAG of BEHAVIOUR instead of running")

    p_dump = sub.add_parser("dump-dag", help="print the compiled DAG of a reactor behaviour")
    p_dump.add_argument("file")
    p_dump.add_argument("behaviour")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "dump-dag":
        return dump_dag(RunConfig(args.file, dump_dag=args.behaviour))
    config = RunConfig(args.file, args.scheduler, args.seed, args.max_turns,
                       args.trace_propagation, args.trace_sct, args.dump_dag)
    try:
        return run(config)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
