"""Walk through the file-system message fabric with two ranks.

Two processes share nothing but a directory.  One writes a payload file,
flushes it, and creates a zero-length ready marker; the other polls for the
marker, reads the payload, and deletes both files.  This script drives both
ranks from one process so each step is visible.
"""

import os
import tempfile

from ihpc.msgfabric import PayloadType, init_context

fabric = tempfile.mkdtemp(prefix="fabric_")
print(f"fabric directory: {fabric}")

sender = init_context(fabric, my_rank=0, nranks=2)
receiver = init_context(fabric, my_rank=1, nranks=2)

# A send is complete once the .ok marker exists; no acknowledgment.
seq = sender.send(1, tag=7, payload_type=PayloadType.UTF8_TEXT,
                  payload="hello from rank 0".encode())
print(f"sent seq={seq}; files now on disk:")
for name in sorted(os.listdir(fabric)):
    print(f"  {name}")

print(f"receiver.probe(src=0, tag=7) -> {receiver.probe(0, 7)}")

ptype, payload = receiver.recv(src=0, tag=7)
print(f"received ({ptype.name}): {payload.decode()!r}")
print(f"fabric after consumption: {os.listdir(fabric)}  (receiver deletes)")

# Messages on one (src, dst, tag) channel arrive in send order.
for word in ("first", "second", "third"):
    sender.send(1, tag=9, payload_type=PayloadType.UTF8_TEXT, payload=word.encode())
print("FIFO:", [receiver.recv(0, 9)[1].decode() for _ in range(3)])
