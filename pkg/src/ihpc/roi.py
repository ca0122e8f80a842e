"""Return-on-investment metric for an interactive HPC installation.

The benefit is the staff time saved by running jobs in parallel instead of
serially, valued at one staff rate.  The cost side sums the time to
parallelize each code set, train users, launch jobs, and administrate the
system (all valued at the same rate) plus the system's purchase cost.
``roi = benefit / cost`` is dimensionless.

Per-job benefit is floored at zero: a job whose parallel wall time meets or
exceeds its serial baseline contributes nothing, never a negative amount.
Measured serial baselines take precedence; when absent, the baseline is
estimated as ``efficiency * cores * compute_hours``.
"""

import json
from dataclasses import dataclass, field

from .errors import ArgumentError

DEFAULT_EFFICIENCY = 0.7


def estimate_serial_time(parallel_hours, cores, efficiency=DEFAULT_EFFICIENCY):
    """Estimated serial hours for work that took ``parallel_hours`` on ``cores``."""
    if cores < 1:
        raise ArgumentError("cores must be >= 1")
    if not 0 < efficiency <= 1:
        raise ArgumentError(f"efficiency must be in (0, 1], got {efficiency}")
    if parallel_hours < 0:
        raise ArgumentError("hours must be >= 0")
    return efficiency * cores * parallel_hours


@dataclass(frozen=True)
class BenefitEntry:
    """One job's contribution: serial baseline vs. actual parallel wall time."""

    user: str
    serial_time_hours: float
    parallel_wall_hours: float

    def __post_init__(self):
        if self.serial_time_hours < 0 or self.parallel_wall_hours < 0:
            raise ArgumentError("hours must be >= 0")

    @property
    def saved_hours(self):
        return max(0.0, self.serial_time_hours - self.parallel_wall_hours)


@dataclass
class RoiLedger:
    """Benefit and cost entries feeding the ROI ratio."""

    staff_rate: float = 100.0  # currency per staff hour
    benefit_entries: list = field(default_factory=list)
    parallelize_hours: float = 0.0
    training_hours: float = 0.0
    launch_overhead_hours: float = 0.0
    admin_hours: float = 0.0
    system_cost_currency: float = 0.0

    def __post_init__(self):
        if self.staff_rate <= 0:
            raise ArgumentError("staff_rate must be > 0")
        for name in ("parallelize_hours", "training_hours",
                     "launch_overhead_hours", "admin_hours",
                     "system_cost_currency"):
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be >= 0")

    def add_job(self, user, parallel_wall_hours, cores=None,
                serial_time_hours=None, efficiency=DEFAULT_EFFICIENCY,
                compute_hours=None):
        """Record one job; estimates the serial baseline when not measured.

        The estimator scales ``compute_hours`` (pure compute portion of the
        wall time, defaulting to the full wall time) by cores and efficiency.
        """
        if serial_time_hours is None:
            if cores is None:
                raise ArgumentError("need cores to estimate a serial baseline")
            basis = parallel_wall_hours if compute_hours is None else compute_hours
            serial_time_hours = estimate_serial_time(basis, cores, efficiency)
        self.benefit_entries.append(
            BenefitEntry(user=user, serial_time_hours=serial_time_hours,
                         parallel_wall_hours=parallel_wall_hours))

    def to_dict(self):
        return {
            "staff_rate": self.staff_rate,
            "benefit_entries": [
                {"user": e.user,
                 "serial_time_hours": e.serial_time_hours,
                 "parallel_wall_hours": e.parallel_wall_hours}
                for e in self.benefit_entries
            ],
            "parallelize_hours": self.parallelize_hours,
            "training_hours": self.training_hours,
            "launch_overhead_hours": self.launch_overhead_hours,
            "admin_hours": self.admin_hours,
            "system_cost_currency": self.system_cost_currency,
        }

    @classmethod
    def from_dict(cls, d):
        ledger = cls(
            staff_rate=d["staff_rate"],
            parallelize_hours=d.get("parallelize_hours", 0.0),
            training_hours=d.get("training_hours", 0.0),
            launch_overhead_hours=d.get("launch_overhead_hours", 0.0),
            admin_hours=d.get("admin_hours", 0.0),
            system_cost_currency=d.get("system_cost_currency", 0.0),
        )
        for e in d.get("benefit_entries", []):
            ledger.benefit_entries.append(BenefitEntry(
                user=e["user"],
                serial_time_hours=e["serial_time_hours"],
                parallel_wall_hours=e["parallel_wall_hours"]))
        return ledger

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass
class RoiResult:
    roi: float
    benefit_currency: float
    cost_currency: float
    breakdown: dict

    def to_dict(self):
        return {
            "roi": self.roi,
            "benefit_currency": self.benefit_currency,
            "cost_currency": self.cost_currency,
            "breakdown": self.breakdown,
        }


def compute_roi(ledger):
    """Benefit over summed costs, with a five-way cost breakdown."""
    rate = ledger.staff_rate
    benefit = sum(e.saved_hours for e in ledger.benefit_entries) * rate
    breakdown = {
        "parallelize_currency": ledger.parallelize_hours * rate,
        "training_currency": ledger.training_hours * rate,
        "launch_currency": ledger.launch_overhead_hours * rate,
        "admin_currency": ledger.admin_hours * rate,
        "system_cost_currency": ledger.system_cost_currency,
    }
    cost = sum(breakdown.values())
    if cost <= 0:
        raise ArgumentError("total cost must be positive to form a ratio")
    return RoiResult(roi=benefit / cost, benefit_currency=benefit,
                     cost_currency=cost, breakdown=breakdown)


def ingest_sim(outcome, ledger, efficiency=DEFAULT_EFFICIENCY):
    """Fold a simulator outcome into the ledger as benefit entries.

    Each simulated job's parallel wall time is wait + launch latency +
    service; its serial baseline is estimated from the service (compute)
    time.  Launch latencies accumulate into the launch overhead cost.
    """
    for o in outcome.jobs:
        wall_h = (o.wait_time + o.launch_latency + o.job.service_time) / 3600.0
        ledger.add_job(user=o.job.user, parallel_wall_hours=wall_h,
                       cores=o.job.cores, efficiency=efficiency,
                       compute_hours=o.job.service_time / 3600.0)
        ledger.launch_overhead_hours += o.launch_latency / 3600.0
    return ledger


def laboratory_fixture(n_users=500, seed=7):
    """Synthetic organization-scale ledger used as an ROI consistency check.

    Many users, modest per-user training, a shared system cost, and jobs at
    0.7 efficiency on 16-64 cores.
    """
    import random

    rng = random.Random(seed)
    ledger = RoiLedger(
        staff_rate=100.0,
        parallelize_hours=40.0 * 25,      # 25 code sets parallelized
        training_hours=8.0 * n_users,     # one day of training per user
        admin_hours=2000.0,               # one staff-year of administration
        system_cost_currency=1_500_000.0,
    )
    for i in range(n_users):
        user = f"user{i:03d}"
        for _ in range(rng.randint(2, 6)):
            cores = rng.choice([16, 32, 64])
            wall = rng.uniform(0.5, 4.0)  # hours on the cluster
            ledger.add_job(user=user, parallel_wall_hours=wall, cores=cores,
                           efficiency=0.7)
            ledger.launch_overhead_hours += 15.0 / 3600.0
    return ledger
