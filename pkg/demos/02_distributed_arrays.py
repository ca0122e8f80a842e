"""Distributed arrays: block maps, local-global mapping, scatter and agg.

A DistMap assigns every global index to exactly one (rank, local index).
The demo drives four ranks' contexts sequentially from one process so the
whole scatter -> local compute -> aggregate cycle is observable.
"""

import tempfile

import numpy as np

from ihpc.msgfabric import init_context
from ihpc.pgas import (agg, global_to_local, local_extent, local_to_global,
                       make_map, map_local, scatter_from_zero)

# 10 elements over 4 ranks: the first 10 % 4 = 2 ranks get ceil(10/4) = 3.
m = make_map(global_shape=[10], grid=[4], nranks=4)
for rank in range(4):
    print(f"rank {rank} owns {local_extent(m, rank)}")

print(f"global index 6 lives at {global_to_local(m, 6)}")
print(f"(rank 3, local 0) is global {local_to_global(m, 3, 0)}")

fabric = tempfile.mkdtemp(prefix="pgas_")
ctxs = [init_context(fabric, r, 4) for r in range(4)]

# Rank 0 scatters the full array; each rank ends up with exactly its block.
values = np.arange(10.0)
arrs = [scatter_from_zero(ctxs[0], m, "f64", values)]
arrs += [scatter_from_zero(ctxs[r], m, "f64") for r in range(1, 4)]
for r, arr in enumerate(arrs):
    print(f"rank {r} local block: {arr.local_block}")

# Elementwise work is purely local; aggregation brings it home to rank 0.
doubled = [map_local(a, lambda x: x * 2) for a in arrs]
for r in range(1, 4):
    agg(doubled[r])  # workers contribute their blocks
result = agg(doubled[0])
print(f"agg(map_local(scatter(A), x*2)) at rank 0: {result}")
assert np.array_equal(result, values * 2)
