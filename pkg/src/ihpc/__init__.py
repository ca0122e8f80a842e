"""Desk-scale interactive, on-demand HPC stack.

Subsystems:

* :mod:`ihpc.msgfabric` -- file-system message passing between ranks
* :mod:`ihpc.pgas`      -- block-distributed global arrays
* :mod:`ihpc.launcher`  -- desktop-to-cluster job launcher (rank 0 stays home)
* :mod:`ihpc.sched`     -- on-demand admission policy + discrete-event simulator
* :mod:`ihpc.roi`       -- productivity return-on-investment metric
* :mod:`ihpc.cli`       -- the ``ihpc`` command
"""

from .errors import (ArgumentError, CapacityError, IhpcError, LaunchError,
                     NotFoundError, NotReadyError, ProtocolError, SetupError,
                     StateError, TimeoutError, TransportError)
from .launcher import JobManager, JobRecord, JobSpec, JobState, Location
from .msgfabric import FabricContext, PayloadType, init_context
from .pgas import (DistArray, DistMap, agg, decode_typed_array,
                   encode_typed_array, global_to_local, local_extent,
                   local_to_global, make_map, map_local, scatter_from_zero)
from .roi import RoiLedger, compute_roi, estimate_serial_time, ingest_sim
from .sched import (Discipline, PolicyConfig, Regime, SimJob, admit,
                    classify_regime, compare_policies, launch_latency,
                    set_override, simulate)

__version__ = "0.1.0"
