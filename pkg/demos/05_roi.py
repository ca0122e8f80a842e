"""The productivity return-on-investment metric, fed by the simulator.

Benefit: staff time saved by parallel runs over serial baselines, at one
staff rate.  Cost: parallelizing codes, training users, launching jobs,
administration, and the system itself.
"""

import random

from ihpc.roi import RoiLedger, compute_roi, ingest_sim, laboratory_fixture
from ihpc.sched import Discipline, PolicyConfig, SimJob, simulate

# Simulated cluster activity flows straight into the benefit column.
policy = PolicyConfig(total_cores=128)
rng = random.Random(2)
jobs = [SimJob(f"j{i}", f"u{rng.randrange(8)}", rng.choice([4, 8, 16]),
               rng.uniform(600, 7200), rng.uniform(0, 50_000))
        for i in range(200)]
outcome = simulate(policy, jobs, Discipline.ON_DEMAND)

ledger = RoiLedger(staff_rate=100.0, parallelize_hours=200.0,
                   training_hours=80.0, admin_hours=300.0,
                   system_cost_currency=250_000.0)
ingest_sim(outcome, ledger)
result = compute_roi(ledger)
print(f"simulated quarter: benefit ${result.benefit_currency:,.0f}, "
      f"cost ${result.cost_currency:,.0f}, ROI {result.roi:.2f}")
for category, currency in result.breakdown.items():
    print(f"  {category:<24}${currency:,.0f}")

# An organization-scale synthetic ledger lands in the historical 2x-10x band.
org = compute_roi(laboratory_fixture())
print(f"\n500-user synthetic organization: ROI {org.roi:.2f}")
assert 2.0 <= org.roi <= 10.0
