"""Shared helpers for multi-process fabric tests."""

import multiprocessing as mp
import pickle

import pytest


def _child(fn, rank, nranks, job_dir, args, kwargs):
    result = fn(rank, nranks, job_dir, *args, **kwargs)
    with open(f"{job_dir}/_result_{rank}.pkl", "wb") as f:
        pickle.dump(result, f)


def run_ranks(nranks, job_dir, fn, *args, timeout=60, **kwargs):
    """Run ``fn(rank, nranks, job_dir, ...)`` in ``nranks`` OS processes.

    Returns the per-rank return values.  Raises if any rank dies or hangs.
    """
    ctx = mp.get_context("fork")
    procs = [ctx.Process(target=_child, args=(fn, r, nranks, str(job_dir), args, kwargs))
             for r in range(nranks)]
    for p in procs:
        p.start()
    for r, p in enumerate(procs):
        p.join(timeout)
        if p.is_alive():
            for q in procs:
                q.kill()
            raise TimeoutError(f"rank {r} did not finish within {timeout}s")
    bad = [r for r, p in enumerate(procs) if p.exitcode != 0]
    if bad:
        raise RuntimeError(f"ranks {bad} exited nonzero")
    results = []
    for r in range(nranks):
        with open(f"{job_dir}/_result_{r}.pkl", "rb") as f:
            results.append(pickle.load(f))
    return results


@pytest.fixture
def fabric_dir(tmp_path):
    d = tmp_path / "fabric"
    d.mkdir()
    return d
