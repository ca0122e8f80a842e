"""Desktop-to-cluster job launcher: the glue between the user's session
and the worker ranks.

A launch takes three things: the program, the number of cores, and where
to run them.  ``Local`` spawns every rank as a local process and waits;
``Grid`` spawns ranks 1..n-1 as workers while rank 0 executes in the
invoking process (results land in the caller's session); ``Background``
spawns all ranks detached and returns immediately, with results collected
later from the job directory.  The user never interacts with a worker
process directly -- all control flows through launch/status/collect/abort.

Job directory layout: ``<root>/jobs/<job_id>/{fabric/, out/, result/,
job.json}``; job.json is rewritten atomically so concurrent readers never
see torn state.
"""

import enum
import json
import os
import secrets
import signal
import subprocess
import sys
import time
import traceback
from dataclasses import dataclass, field

from . import worker as worker_mod
from .errors import (ArgumentError, CapacityError, LaunchError, NotFoundError,
                     NotReadyError, StateError)
from .sched import AllocationLedger, admit

WAIT_POLL_S = 0.02


class Location(str, enum.Enum):
    LOCAL = "local"
    GRID = "grid"
    BACKGROUND = "background"


class JobState(str, enum.Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"
    ABORTED = "Aborted"


TERMINAL_STATES = {JobState.DONE, JobState.FAILED, JobState.ABORTED}


@dataclass(frozen=True)
class JobSpec:
    """The three-argument launch contract plus the requesting user."""

    program: str
    ncores: int
    location: Location
    args: tuple = ()
    user: str = "user"

    def __post_init__(self):
        if self.ncores < 1:
            raise ArgumentError("ncores must be >= 1")
        object.__setattr__(self, "location", Location(self.location))
        object.__setattr__(self, "args", tuple(self.args))


@dataclass
class JobRecord:
    """On-disk lifecycle state of one launched job."""

    job_id: str
    spec: JobSpec
    state: JobState
    job_dir: str
    submit_time: float
    start_time: float = None
    end_time: float = None
    rank_exits: dict = field(default_factory=dict)  # rank -> exit code
    pids: dict = field(default_factory=dict)        # rank -> pid
    cores_released: bool = True  # False while cores are held in the ledger
    echo_lines: list = field(default_factory=list)

    def to_dict(self):
        return {
            "job_id": self.job_id,
            "spec": {
                "program": self.spec.program,
                "args": list(self.spec.args),
                "ncores": self.spec.ncores,
                "location": self.spec.location.value,
                "user": self.spec.user,
            },
            "state": self.state.value,
            "job_dir": self.job_dir,
            "submit_time": self.submit_time,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "rank_exits": {str(r): c for r, c in self.rank_exits.items()},
            "pids": {str(r): p for r, p in self.pids.items()},
            "cores_released": self.cores_released,
            "echo_lines": self.echo_lines,
        }

    @classmethod
    def from_dict(cls, d):
        spec = JobSpec(program=d["spec"]["program"], args=tuple(d["spec"]["args"]),
                       ncores=d["spec"]["ncores"], location=d["spec"]["location"],
                       user=d["spec"]["user"])
        return cls(job_id=d["job_id"], spec=spec, state=JobState(d["state"]),
                   job_dir=d["job_dir"], submit_time=d["submit_time"],
                   start_time=d.get("start_time"), end_time=d.get("end_time"),
                   rank_exits={int(r): c for r, c in d.get("rank_exits", {}).items()},
                   pids={int(r): p for r, p in d.get("pids", {}).items()},
                   cores_released=d.get("cores_released", True),
                   echo_lines=d.get("echo_lines", []))


class JobManager:
    """Launches and tracks jobs under one root directory.

    When a scheduling policy is attached, launches pass through admission
    and cores are accounted in the attached ledger until the job reaches a
    terminal state.
    """

    def __init__(self, root, policy=None, ledger=None):
        self.root = os.fspath(root)
        self.jobs_root = os.path.join(self.root, "jobs")
        os.makedirs(self.jobs_root, exist_ok=True)
        self.policy = policy
        self.ledger = ledger if ledger is not None else AllocationLedger()
        self._procs = {}  # job_id -> {rank: Popen}

    # -- persistence --------------------------------------------------------

    def _job_dir(self, job_id):
        return os.path.join(self.jobs_root, job_id)

    def _save(self, record):
        path = os.path.join(record.job_dir, "job.json")
        tmp = path + f".tmp{os.getpid()}"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(record.to_dict(), f, indent=2)
            f.write("\n")
        os.rename(tmp, path)

    def _load(self, job_id):
        path = os.path.join(self._job_dir(job_id), "job.json")
        try:
            with open(path, encoding="utf-8") as f:
                return JobRecord.from_dict(json.load(f))
        except FileNotFoundError:
            raise NotFoundError(f"unknown job {job_id}") from None

    def _new_job_id(self):
        count = len(os.listdir(self.jobs_root))
        return f"{count:06d}_{secrets.token_hex(4)}"

    # -- launch -------------------------------------------------------------

    def launch(self, spec):
        """Launch a job per its spec; see module docstring for the modes."""
        if spec.program not in worker_mod.DEMOS and not os.path.exists(spec.program):
            raise ArgumentError(f"program not found: {spec.program}")
        if self.policy is not None:
            decision = admit(self.policy, self.ledger, spec.user, spec.ncores,
                             time.time())
            if not decision:
                raise CapacityError(decision.reason, decision.cap)

        job_id = self._new_job_id()
        job_dir = self._job_dir(job_id)
        for sub in ("fabric", "out", "result"):
            os.makedirs(os.path.join(job_dir, sub))
        record = JobRecord(job_id=job_id, spec=spec, state=JobState.PENDING,
                           job_dir=job_dir, submit_time=time.time())
        self._save(record)

        if self.policy is not None:
            self.ledger.allocate(job_id, spec.user, spec.ncores)
            record.cores_released = False

        try:
            if spec.location is Location.GRID:
                worker_ranks = range(1, spec.ncores)
            else:
                worker_ranks = range(spec.ncores)
            detach = spec.location is Location.BACKGROUND
            procs = {}
            for rank in worker_ranks:
                procs[rank] = self._spawn_rank(record, rank, detach)
                record.pids[rank] = procs[rank].pid
                record.echo_lines.append(
                    f"launching rank {rank} of {spec.ncores} (pid {procs[rank].pid})")
            self._procs[job_id] = procs
            record.state = JobState.RUNNING
            record.start_time = time.time()
            self._save(record)
        except OSError as exc:
            self._signal_all(record)
            record.state = JobState.FAILED
            record.end_time = time.time()
            self._release_cores(record)
            self._save(record)
            raise LaunchError(f"spawn failed: {exc}") from exc

        if spec.location is Location.BACKGROUND:
            return record

        if spec.location is Location.GRID:
            self._run_rank0_inline(record)
        for rank, proc in self._procs[job_id].items():
            proc.wait()
        return self._finalize(record)

    def _spawn_rank(self, record, rank, detach):
        spec = record.spec
        env = dict(os.environ)
        env.update(worker_mod.rank_env(record.job_dir, rank, spec.ncores))
        log_path = os.path.join(record.job_dir, "out", f"rank_{rank}.log")
        log = open(log_path, "wb")
        try:
            return subprocess.Popen(
                [sys.executable, "-m", "ihpc.worker", spec.program, *spec.args],
                env=env, stdout=log, stderr=subprocess.STDOUT,
                stdin=subprocess.DEVNULL, start_new_session=detach)
        finally:
            log.close()

    def _run_rank0_inline(self, record):
        """Grid mode: rank 0's computation runs in the invoking process."""
        spec = record.spec
        log_path = os.path.join(record.job_dir, "out", "rank_0.log")
        record.echo_lines.append(
            f"launching rank 0 of {spec.ncores} inline (pid {os.getpid()})")
        with open(log_path, "a", encoding="utf-8") as log:
            log.write(f"rank 0 of {spec.ncores} pid {os.getpid()} "
                      f"starting {spec.program} (inline)\n")
            try:
                code = worker_mod.run_program(spec.program, spec.args,
                                              record.job_dir, 0, spec.ncores)
                code = 0 if code is None else int(code)
            except Exception:
                log.write(traceback.format_exc())
                code = 1
            log.write(f"rank 0 exiting with code {code}\n")
        worker_mod.write_exit_marker(record.job_dir, 0, code)

    # -- lifecycle ----------------------------------------------------------

    def _read_exit_markers(self, record):
        exits = {}
        out_dir = os.path.join(record.job_dir, "out")
        for rank in range(record.spec.ncores):
            path = os.path.join(out_dir, f"rank_{rank}.exit")
            try:
                with open(path, encoding="utf-8") as f:
                    exits[rank] = int(f.read().strip())
            except (FileNotFoundError, ValueError):
                pass
        return exits

    def _finalize(self, record):
        record.rank_exits = self._read_exit_markers(record)
        procs = self._procs.get(record.job_id, {})
        for rank, proc in procs.items():
            if proc.poll() is not None and rank not in record.rank_exits:
                record.rank_exits[rank] = proc.returncode
        all_done = len(record.rank_exits) == record.spec.ncores
        any_bad = any(c != 0 for c in record.rank_exits.values())
        if any_bad:
            record.state = JobState.FAILED
        elif all_done:
            record.state = JobState.DONE
        if record.state in TERMINAL_STATES:
            record.end_time = record.end_time or time.time()
            self._release_cores(record)
        self._save(record)
        return record

    def _release_cores(self, record):
        if not record.cores_released:
            self.ledger.release(record.job_id)
            record.cores_released = True

    def status(self, job_id):
        """Current record; refreshes state of detached jobs from exit markers."""
        record = self._load(job_id)
        if record.state is JobState.RUNNING:
            exits = self._read_exit_markers(record)
            if len(exits) == record.spec.ncores:
                record.rank_exits = exits
                record = self._finalize(record)
            elif any(c != 0 for c in exits.values()) and \
                    not self._any_rank_alive(record):
                record.rank_exits = exits
                record.state = JobState.FAILED
                record = self._finalize(record)
        return record

    def _any_rank_alive(self, record):
        for pid in record.pids.values():
            try:
                os.kill(pid, 0)
                return True
            except OSError:
                continue
        return False

    def collect(self, job_id):
        """Rank-0 result files plus per-rank log paths; idempotent."""
        record = self.status(job_id)
        if record.state not in (JobState.DONE, JobState.FAILED):
            raise NotReadyError(f"job {job_id} is {record.state.value}")
        result_dir = os.path.join(record.job_dir, "result")
        results = {name: os.path.join(result_dir, name)
                   for name in sorted(os.listdir(result_dir))}
        out_dir = os.path.join(record.job_dir, "out")
        logs = {rank: os.path.join(out_dir, f"rank_{rank}.log")
                for rank in range(record.spec.ncores)
                if os.path.exists(os.path.join(out_dir, f"rank_{rank}.log"))}
        return {"job_id": job_id, "state": record.state.value,
                "results": results, "logs": logs}

    def abort(self, job_id):
        """Signal and reap every spawned rank; cores return to the ledger."""
        record = self.status(job_id)
        if record.state in TERMINAL_STATES:
            raise StateError(f"job {job_id} already {record.state.value}")
        self._signal_all(record)
        record.state = JobState.ABORTED
        record.end_time = time.time()
        record.rank_exits = self._read_exit_markers(record)
        self._release_cores(record)
        self._save(record)
        return record

    def _signal_all(self, record):
        procs = self._procs.get(record.job_id, {})
        for rank, pid in record.pids.items():
            try:
                os.kill(pid, signal.SIGTERM)
            except OSError:
                continue
        deadline = time.monotonic() + 5.0
        for proc in procs.values():
            remaining = max(0.0, deadline - time.monotonic())
            try:
                proc.wait(timeout=remaining)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
        if not procs:  # job launched by another process; poll the pids
            while time.monotonic() < deadline and self._any_rank_alive(record):
                time.sleep(WAIT_POLL_S)
            for pid in record.pids.values():
                try:
                    os.kill(pid, signal.SIGKILL)
                except OSError:
                    continue
