"""On-demand scheduling policy and a discrete-event simulator.

The policy caps each user at ``floor(total_cores * cap_fraction)`` cores
(minimum 1, fraction defaults to 1/8) so that a slice of the machine stays
free for immediate launches.  A user's cap can be raised temporarily via
an expiring override.  Launch latency is modeled as ``a + b * ranks``
seconds, with defaults tuned so that hundreds of ranks launch in under
20 seconds.

The simulator replays a workload under two disciplines:

* ``OnDemand``   -- at each event, every waiting job that passes admission
  starts immediately; jobs are held only by the per-user cap or total
  capacity.
* ``BatchFifo``  -- strict arrival-order dispatch whenever total capacity
  fits the head job; no per-user cap, no backfill.

Runs are deterministic: identical inputs produce byte-identical traces.
"""

import enum
import heapq
import math
from dataclasses import dataclass, field, replace

from .errors import ArgumentError, StateError

REGIME_DESKTOP_MAX = 300.0       # below this: Desktop
REGIME_INTERACTIVE_MAX = 10800.0  # above this: Classic; both bounds Interactive


class Regime(str, enum.Enum):
    DESKTOP = "Desktop"
    INTERACTIVE = "Interactive"
    CLASSIC = "Classic"


class Discipline(str, enum.Enum):
    ON_DEMAND = "OnDemand"
    BATCH_FIFO = "BatchFifo"


def classify_regime(runtime):
    """Map a runtime in seconds to a computing regime.

    Desktop = [0, 300) s, Interactive = [300, 10800] s, Classic beyond.
    """
    if runtime < 0:
        raise ArgumentError(f"runtime must be >= 0, got {runtime}")
    if runtime < REGIME_DESKTOP_MAX:
        return Regime.DESKTOP
    if runtime <= REGIME_INTERACTIVE_MAX:
        return Regime.INTERACTIVE
    return Regime.CLASSIC


@dataclass(frozen=True)
class Override:
    user: str
    cap_cores: int
    expiry: float


@dataclass(frozen=True)
class PolicyConfig:
    """Scheduler policy parameters."""

    total_cores: int
    cap_fraction: float = 1.0 / 8.0
    overrides: tuple = ()
    latency_base_s: float = 5.0
    latency_per_rank_s: float = 0.025

    def __post_init__(self):
        if self.total_cores < 1:
            raise ArgumentError("total_cores must be positive")
        if not 0 < self.cap_fraction <= 1:
            raise ArgumentError("cap_fraction must be in (0, 1]")

    @property
    def default_cap(self):
        return max(1, math.floor(self.total_cores * self.cap_fraction))

    def effective_cap(self, user, now):
        """The user's cap at instant ``now``: unexpired override, else default."""
        for ov in self.overrides:
            if ov.user == user and now < ov.expiry:
                return ov.cap_cores
        return self.default_cap


def set_override(policy, user, cap_cores, expiry, now=0.0):
    """Return a policy with the user's cap raised to ``cap_cores`` until ``expiry``."""
    if expiry <= now:
        raise ArgumentError(f"override expiry {expiry} is not in the future")
    if cap_cores > policy.total_cores:
        raise ArgumentError(
            f"override cap {cap_cores} exceeds total cores {policy.total_cores}")
    kept = tuple(ov for ov in policy.overrides if ov.user != user)
    return replace(policy, overrides=kept + (Override(user, cap_cores, expiry),))


def launch_latency(policy, ranks):
    """Seconds from submission to all ranks executing, affine in rank count."""
    if ranks < 1:
        raise ArgumentError("ranks must be >= 1")
    return policy.latency_base_s + policy.latency_per_rank_s * ranks


@dataclass
class Admission:
    granted: bool
    reason: str = ""
    cap: int = 0

    def __bool__(self):
        return self.granted


class AllocationLedger:
    """Live core allocations keyed by job id; one serialized decision point."""

    def __init__(self):
        self._alloc = {}  # job_id -> (user, cores)
        self._per_user = {}
        self._total = 0

    def user_cores(self, user):
        return self._per_user.get(user, 0)

    @property
    def total_allocated(self):
        return self._total

    def allocate(self, job_id, user, cores):
        if job_id in self._alloc:
            raise StateError(f"job {job_id} already allocated")
        self._alloc[job_id] = (user, cores)
        self._per_user[user] = self._per_user.get(user, 0) + cores
        self._total += cores

    def release(self, job_id):
        """Return a job's cores exactly once; double release is an error."""
        if job_id not in self._alloc:
            raise StateError(f"job {job_id} is not allocated (unknown or already released)")
        user, cores = self._alloc.pop(job_id)
        self._per_user[user] -= cores
        self._total -= cores


def admit(policy, ledger, user, cores, now):
    """Admission test: Granted iff both the user cap and total capacity fit."""
    if cores < 1:
        raise ArgumentError("cores must be >= 1")
    if cores > policy.total_cores:
        raise ArgumentError(
            f"request for {cores} cores can never run on {policy.total_cores}")
    cap = policy.effective_cap(user, now)
    if ledger.user_cores(user) + cores > cap:
        return Admission(False, "user-cap", cap)
    if ledger.total_allocated + cores > policy.total_cores:
        return Admission(False, "total-capacity", policy.total_cores)
    return Admission(True, "", cap)


def release(ledger, job_id):
    release_fn = ledger.release
    release_fn(job_id)
    return ledger


# -- simulator ---------------------------------------------------------------

@dataclass(frozen=True)
class SimJob:
    """One simulated launch request."""

    job_id: str
    user: str
    cores: int
    service_time: float
    arrival_time: float

    def __post_init__(self):
        if self.cores < 1:
            raise ArgumentError(f"job {self.job_id}: cores must be >= 1")
        if self.service_time <= 0:
            raise ArgumentError(f"job {self.job_id}: service_time must be > 0")
        if self.arrival_time < 0:
            raise ArgumentError(f"job {self.job_id}: negative arrival time")


@dataclass
class JobOutcome:
    job: SimJob
    start: float
    launch_latency: float
    end: float
    cap_at_grant: int

    @property
    def wait_time(self):
        return self.start - self.job.arrival_time


@dataclass
class SimOutcome:
    """Per-job results plus aggregate metrics for one simulated run."""

    discipline: Discipline
    jobs: list
    trace: list
    makespan: float
    mean_wait: float
    median_wait: float
    p95_wait: float
    mean_utilization: float
    max_utilization: float
    utilization_series: list  # (t0, t1, utilization) steps
    regime_histogram: dict

    def trace_text(self):
        return "".join(line + "\n" for line in self.trace)


def _percentile(sorted_vals, q):
    # Linear interpolation between closest ranks; matches numpy's default.
    if not sorted_vals:
        return 0.0
    pos = q * (len(sorted_vals) - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return sorted_vals[lo]
    return sorted_vals[lo] + (sorted_vals[hi] - sorted_vals[lo]) * (pos - lo)


def _fmt(x):
    return f"{x:.6f}"


def simulate(policy, jobs, discipline):
    """Run one workload under one discipline; deterministic given inputs."""
    discipline = Discipline(discipline)
    jobs = list(jobs)
    seen = set()
    for j in jobs:
        if not isinstance(j, SimJob):
            raise ArgumentError(f"not a SimJob: {j!r}")
        if j.job_id in seen:
            raise ArgumentError(f"duplicate job id {j.job_id}")
        seen.add(j.job_id)
        if j.cores > policy.total_cores:
            raise ArgumentError(
                f"job {j.job_id} requests {j.cores} cores on a "
                f"{policy.total_cores}-core system and can never run")
        if discipline is Discipline.ON_DEMAND:
            best_cap = max([policy.default_cap] +
                           [ov.cap_cores for ov in policy.overrides
                            if ov.user == j.user and ov.expiry > j.arrival_time])
            if j.cores > best_cap:
                raise ArgumentError(
                    f"job {j.job_id} requests {j.cores} cores above user "
                    f"{j.user}'s cap {best_cap}; it would be held forever")
    arrivals = sorted(jobs, key=lambda j: (j.arrival_time, j.job_id))

    ledger = AllocationLedger()
    waiting = []      # (arrival_time, job_id, SimJob), kept sorted
    running = []      # heap of (end_time, job_id, JobOutcome)
    outcomes = {}
    trace = []
    util_points = []  # (time, allocated_cores) step changes
    next_arrival = 0
    now = 0.0

    def record_util(t):
        util_points.append((t, ledger.total_allocated))

    def start_job(job, t, cap):
        latency = launch_latency(policy, job.cores)
        ledger.allocate(job.job_id, job.user, job.cores)
        out = JobOutcome(job=job, start=t, launch_latency=latency,
                         end=t + latency + job.service_time, cap_at_grant=cap)
        outcomes[job.job_id] = out
        heapq.heappush(running, (out.end, job.job_id, out))
        trace.append(
            f"{_fmt(t)},start,{job.job_id},{job.user},{job.cores},"
            f"wait={_fmt(out.wait_time)};latency={_fmt(latency)}")
        record_util(t)

    def dispatch(t):
        if discipline is Discipline.ON_DEMAND:
            # Ascending (arrival, job_id); every admissible waiter starts now.
            # One pass suffices: starting a job only consumes capacity, so it
            # can never make an earlier-held job admissible.
            still_waiting = []
            for entry in waiting:
                job = entry[2]
                dec = admit(policy, ledger, job.user, job.cores, t)
                if dec:
                    start_job(job, t, dec.cap)
                else:
                    still_waiting.append(entry)
            waiting[:] = still_waiting
        else:
            # Strict FIFO: only the head may start, whenever capacity fits.
            while waiting:
                _, _, job = waiting[0]
                if ledger.total_allocated + job.cores > policy.total_cores:
                    break
                waiting.pop(0)
                start_job(job, t, policy.total_cores)

    while next_arrival < len(arrivals) or running:
        t_arr = arrivals[next_arrival].arrival_time if next_arrival < len(arrivals) else math.inf
        t_end = running[0][0] if running else math.inf
        now = min(t_arr, t_end)
        # Completions first so freed cores are visible to same-instant arrivals.
        while running and running[0][0] == now:
            _, job_id, out = heapq.heappop(running)
            ledger.release(job_id)
            trace.append(
                f"{_fmt(now)},finish,{job_id},{out.job.user},{out.job.cores},")
            record_util(now)
        while next_arrival < len(arrivals) and arrivals[next_arrival].arrival_time == now:
            job = arrivals[next_arrival]
            next_arrival += 1
            # arrivals are pre-sorted by (arrival, job_id), so waiting stays sorted
            waiting.append((job.arrival_time, job.job_id, job))
            trace.append(f"{_fmt(now)},arrive,{job.job_id},{job.user},{job.cores},")
        dispatch(now)

    makespan = now
    waits = sorted(o.wait_time for o in outcomes.values())
    series = []
    integral = 0.0
    max_util = 0.0
    for (t0, cores), (t1, _) in zip(util_points, util_points[1:]):
        u = cores / policy.total_cores
        max_util = max(max_util, u)
        if t1 > t0:
            series.append((t0, t1, u))
            integral += u * (t1 - t0)
    mean_util = integral / makespan if makespan > 0 else 0.0
    hist = {r.value: 0 for r in Regime}
    for j in jobs:
        hist[classify_regime(j.service_time).value] += 1

    ordered = [outcomes[j.job_id] for j in arrivals]
    return SimOutcome(
        discipline=discipline,
        jobs=ordered,
        trace=trace,
        makespan=makespan,
        mean_wait=sum(waits) / len(waits) if waits else 0.0,
        median_wait=_percentile(waits, 0.5),
        p95_wait=_percentile(waits, 0.95),
        mean_utilization=mean_util,
        max_utilization=max_util,
        utilization_series=series,
        regime_histogram=hist,
    )


@dataclass
class PolicyComparison:
    on_demand: SimOutcome
    batch_fifo: SimOutcome

    @property
    def mean_wait_delta(self):
        """OnDemand mean wait minus BatchFifo mean wait (negative favors on-demand)."""
        return self.on_demand.mean_wait - self.batch_fifo.mean_wait

    @property
    def mean_utilization_delta(self):
        return self.on_demand.mean_utilization - self.batch_fifo.mean_utilization


def compare_policies(policy, jobs):
    """Run both disciplines on the identical workload and report deltas."""
    jobs = list(jobs)
    return PolicyComparison(
        on_demand=simulate(policy, jobs, Discipline.ON_DEMAND),
        batch_fifo=simulate(policy, jobs, Discipline.BATCH_FIFO),
    )


def audit_outcome(policy, outcome):
    """Verify capacity and cap invariants at every event instant.

    Raises AssertionError with the violating instant on failure.  A user's
    usage is checked against the largest cap in force at grant time among
    that user's still-running jobs, which equals the default cap when no
    overrides exist.
    """
    events = []
    for o in outcome.jobs:
        events.append((o.start, 1, o.job.job_id, o))
        events.append((o.end, 0, o.job.job_id, o))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    running = {}
    for t, kind, job_id, o in events:
        if kind == 0:
            running.pop(job_id, None)
        else:
            running[job_id] = o
        total = sum(r.job.cores for r in running.values())
        assert total <= policy.total_cores, \
            f"t={t}: {total} cores allocated > {policy.total_cores}"
        if outcome.discipline is Discipline.ON_DEMAND:
            by_user = {}
            for r in running.values():
                by_user.setdefault(r.job.user, []).append(r)
            for user, rs in by_user.items():
                used = sum(r.job.cores for r in rs)
                cap = max(r.cap_at_grant for r in rs)
                assert used <= cap, f"t={t}: user {user} at {used} > cap {cap}"
    return True


# -- workload / trace file formats -------------------------------------------

def parse_workload(text):
    """Parse `arrival_s,user,cores,service_s` lines into SimJobs.

    Blank lines and ``#`` comments are ignored; job ids are j0000, j0001, ...
    in file order.
    """
    jobs = []
    for i, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise ArgumentError(f"workload line {i + 1}: expected 4 fields, got {len(parts)}")
        try:
            arrival = float(parts[0])
            cores = int(parts[2])
            service = float(parts[3])
        except ValueError as exc:
            raise ArgumentError(f"workload line {i + 1}: {exc}") from exc
        jobs.append(SimJob(job_id=f"j{len(jobs):04d}", user=parts[1], cores=cores,
                           service_time=service, arrival_time=arrival))
    return jobs


def load_workload(path):
    with open(path, encoding="utf-8") as f:
        return parse_workload(f.read())
