"""Rank process entrypoint: ``python -m ihpc.worker <program> [args...]``.

The launcher passes the rank's identity through three environment
variables: IHPC_JOB_DIR, IHPC_RANK and IHPC_NRANKS.  The program is either
a registered demo name or a path to a Python script (run as ``__main__``).
On completion the worker writes ``out/rank_<r>.exit`` containing its exit
code so detached jobs can be tracked without a supervisor process.
"""

import os
import runpy
import sys
import traceback

from .demos import DEMOS
from .msgfabric import init_context

ENV_JOB_DIR = "IHPC_JOB_DIR"
ENV_RANK = "IHPC_RANK"
ENV_NRANKS = "IHPC_NRANKS"


def rank_env(job_dir, rank, nranks):
    """Environment variable triple handed to every rank process."""
    return {ENV_JOB_DIR: os.fspath(job_dir), ENV_RANK: str(rank),
            ENV_NRANKS: str(nranks)}


def write_exit_marker(job_dir, rank, code):
    out_dir = os.path.join(job_dir, "out")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"rank_{rank}.exit")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(f"{code}\n")
    os.rename(tmp, path)


def run_program(program, args, job_dir, rank, nranks):
    """Execute one rank of ``program``; returns its exit code."""
    if program in DEMOS:
        ctx = init_context(os.path.join(job_dir, "fabric"), rank, nranks)
        code = DEMOS[program](ctx, list(args), job_dir)
        return 0 if code is None else int(code)
    if not os.path.exists(program):
        raise FileNotFoundError(f"program not found: {program}")
    old_argv = sys.argv
    sys.argv = [program, *args]
    try:
        runpy.run_path(program, run_name="__main__")
    except SystemExit as exc:
        return int(exc.code or 0)
    finally:
        sys.argv = old_argv
    return 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print("usage: python -m ihpc.worker <program> [args...]", file=sys.stderr)
        return 2
    job_dir = os.environ[ENV_JOB_DIR]
    rank = int(os.environ[ENV_RANK])
    nranks = int(os.environ[ENV_NRANKS])
    program, args = argv[0], argv[1:]
    print(f"rank {rank} of {nranks} pid {os.getpid()} starting {program}", flush=True)
    try:
        code = run_program(program, args, job_dir, rank, nranks)
    except Exception:
        traceback.print_exc()
        code = 1
    print(f"rank {rank} exiting with code {code}", flush=True)
    write_exit_marker(job_dir, rank, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
