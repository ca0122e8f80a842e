"""On-demand admission vs. utilization-first batch FIFO, on one workload.

A per-user core cap (1/8 of the machine by default) holds back floods so
capacity stays available for immediate launches; batch FIFO instead packs
the machine and makes latecomers queue behind the head job.
"""

import random

from ihpc.sched import (Discipline, PolicyConfig, SimJob, classify_regime,
                        compare_policies, launch_latency, simulate)

policy = PolicyConfig(total_cores=128)
print(f"{policy.total_cores} cores, per-user cap {policy.default_cap}")
print(f"launch latency at 256 ranks: {launch_latency(policy, 256):.2f}s")

# One user floods ten 16-core jobs: the cap serializes them, keeping
# 112 cores free for everyone else the whole time.
flood = [SimJob(f"f{i}", "alice", 16, 300.0, 0.0) for i in range(10)]
od = simulate(policy, flood, Discipline.ON_DEMAND)
print(f"flood under on-demand: max utilization {od.max_utilization:.3f} "
      f"(>= {128 - 16} cores always free)")
bf = simulate(policy, flood, Discipline.BATCH_FIFO)
print(f"flood under batch FIFO: max utilization {bf.max_utilization:.3f}")

# A mixed interactive workload: many users, mostly short jobs.
rng = random.Random(1)
t = 0.0
jobs = []
for i in range(500):
    t += rng.expovariate(1 / 20.0)
    jobs.append(SimJob(f"j{i:03d}", f"u{rng.randrange(20):02d}",
                       rng.choice([1, 2, 4, 8, 16]),
                       rng.uniform(30, 2000), t))
cmp = compare_policies(policy, jobs)
print(f"on-demand  mean wait {cmp.on_demand.mean_wait:8.1f}s  "
      f"utilization {cmp.on_demand.mean_utilization:.3f}")
print(f"batch FIFO mean wait {cmp.batch_fifo.mean_wait:8.1f}s  "
      f"utilization {cmp.batch_fifo.mean_utilization:.3f}")
print(f"regimes in this workload: {cmp.on_demand.regime_histogram}")
print(f"(3600 s is {classify_regime(3600).value}; 18000 s is "
      f"{classify_regime(18000).value})")
