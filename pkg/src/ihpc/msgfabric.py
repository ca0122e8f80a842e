"""Point-to-point message passing over a shared directory.

Each message is a pair of files in the job's fabric directory: a ``.dat``
file holding a fixed 32-byte binary header plus the payload, and a
zero-length ``.ok`` ready marker with the same basename.  The payload file
is written to a temporary name, flushed, renamed, and only then is the
marker created, so a marker never points at an incomplete payload.  The
receiver deletes both files after a successful read.

Wire header (little-endian, 32 bytes)::

    magic   4s  = b"IHPC"
    version u8  = 1
    ptype   u8  (0 raw bytes, 1 typed array, 2 UTF-8 text)
    reserved u16 = 0
    src     u32
    dst     u32
    tag     u32
    seq     u32
    length  u64  (payload bytes that follow)

Application tags must be < 2**31; the upper half of the tag space is
reserved for collectives (barrier, gather, broadcast, scatter).
"""

import enum
import os
import struct
import tempfile
import time

from .errors import ArgumentError, ProtocolError, SetupError
from .errors import TimeoutError as FabricTimeout
from .errors import TransportError

MAGIC = b"IHPC"
VERSION = 1
HEADER_FMT = "<4sBBHIIIIQ"
HEADER_SIZE = struct.calcsize(HEADER_FMT)
assert HEADER_SIZE == 32

APP_TAG_LIMIT = 2**31

# Reserved tag space layout.  Each collective family gets a 2**28 slice so
# barrier epochs and per-collective application tags cannot collide.
COLLECTIVE_BASE = 2**31
BARRIER_BASE = COLLECTIVE_BASE
GATHER_BASE = COLLECTIVE_BASE + 2**28
BCAST_BASE = COLLECTIVE_BASE + 2 * 2**28
SCATTER_BASE = COLLECTIVE_BASE + 3 * 2**28
COLLECTIVE_SLICE = 2**28

DEFAULT_POLL_INITIAL = 0.010
DEFAULT_POLL_MAX = 0.500


class PayloadType(enum.IntEnum):
    RAW_BYTES = 0
    TYPED_ARRAY = 1
    UTF8_TEXT = 2


def message_basename(seq, src, dst, tag):
    """Decimal zero-padded name; lexicographic order == seq order per channel."""
    return f"m_{seq:08d}_{src:05d}_{dst:05d}_{tag:010d}"


def pack_header(ptype, src, dst, tag, seq, length):
    return struct.pack(HEADER_FMT, MAGIC, VERSION, int(ptype), 0,
                       src, dst, tag, seq, length)


def unpack_header(raw):
    """Decode and validate a 32-byte header. Raises ProtocolError on corruption."""
    if len(raw) < HEADER_SIZE:
        raise ProtocolError(f"short header: {len(raw)} bytes")
    magic, version, ptype, reserved, src, dst, tag, seq, length = \
        struct.unpack(HEADER_FMT, raw[:HEADER_SIZE])
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    try:
        ptype = PayloadType(ptype)
    except ValueError:
        raise ProtocolError(f"unknown payload type {ptype}") from None
    return ptype, src, dst, tag, seq, length


class FabricContext:
    """One rank's handle on the file-system communication fabric.

    Owned by a single logical thread of control; calls on one context must
    be serialized.  Distinct ranks live in distinct OS processes and share
    only the fabric directory.
    """

    def __init__(self, job_dir, my_rank, nranks,
                 poll_initial=DEFAULT_POLL_INITIAL, poll_max=DEFAULT_POLL_MAX):
        if nranks < 1:
            raise ArgumentError(f"nranks must be >= 1, got {nranks}")
        if not 0 <= my_rank < nranks:
            raise ArgumentError(f"rank {my_rank} out of range for nranks={nranks}")
        if not os.path.isdir(job_dir):
            raise SetupError(f"fabric directory missing: {job_dir}")
        if not os.access(job_dir, os.W_OK):
            raise SetupError(f"fabric directory not writable: {job_dir}")
        self.job_dir = os.fspath(job_dir)
        self.my_rank = my_rank
        self.nranks = nranks
        self.poll_initial = poll_initial
        self.poll_max = poll_max
        self._send_seq = {}  # dst -> next seq on (my_rank, dst)

    # -- point to point ----------------------------------------------------

    def send(self, dst, tag, payload_type, payload, _allow_reserved=False):
        """Write one message to ``dst``; returns the sequence number used.

        Complete once the ready marker exists; there is no acknowledgment.
        """
        if dst == self.my_rank:
            raise ArgumentError("send to self is not supported")
        if not 0 <= dst < self.nranks:
            raise ArgumentError(f"dst {dst} out of range")
        if tag < 0 or tag >= 2**32:
            raise ArgumentError(f"tag {tag} outside u32 range")
        if tag >= APP_TAG_LIMIT and not _allow_reserved:
            raise ArgumentError(f"tag {tag} is in the reserved collective range")
        payload = bytes(payload)
        seq = self._send_seq.get(dst, 0)
        base = message_basename(seq, self.my_rank, dst, tag)
        dat_path = os.path.join(self.job_dir, base + ".dat")
        header = pack_header(payload_type, self.my_rank, dst, tag, seq, len(payload))
        try:
            fd, tmp_path = tempfile.mkstemp(prefix=".tmp_" + base, dir=self.job_dir)
            try:
                with os.fdopen(fd, "wb") as f:
                    f.write(header)
                    f.write(payload)
                    f.flush()
                    os.fsync(f.fileno())
                os.rename(tmp_path, dat_path)
            except BaseException:
                try:
                    os.unlink(tmp_path)
                except OSError:
                    pass
                raise
            # Marker creation is the commit point.
            with open(dat_path[:-4] + ".ok", "xb"):
                pass
        except OSError as exc:
            raise TransportError(f"send {self.my_rank}->{dst} failed: {exc}") from exc
        self._send_seq[dst] = seq + 1
        return seq

    def _ready_seqs(self, src, tag):
        """Sorted seq numbers of ready, unconsumed messages on (src, me, tag)."""
        suffix = f"_{src:05d}_{self.my_rank:05d}_{tag:010d}.ok"
        seqs = []
        for name in os.listdir(self.job_dir):
            if name.startswith("m_") and name.endswith(suffix):
                seqs.append(int(name[2:10]))
        seqs.sort()
        return seqs

    def probe(self, src, tag):
        """True iff a matching ready message exists right now; never consumes."""
        return bool(self._ready_seqs(src, tag))

    def recv(self, src, tag, timeout=None, _allow_reserved=False):
        """Block until the lowest-seq matching message arrives; consume it.

        Polls with exponential backoff.  Returns ``(payload_type, payload)``.
        Both message files are deleted after a successful read.
        """
        if src == self.my_rank:
            raise ArgumentError("recv from self is not supported")
        if not 0 <= src < self.nranks:
            raise ArgumentError(f"src {src} out of range")
        if tag >= APP_TAG_LIMIT and not _allow_reserved:
            raise ArgumentError(f"tag {tag} is in the reserved collective range")
        deadline = None if timeout is None else time.monotonic() + timeout
        delay = self.poll_initial
        while True:
            seqs = self._ready_seqs(src, tag)
            if seqs:
                return self._consume(src, tag, seqs[0])
            if deadline is not None and time.monotonic() >= deadline:
                raise FabricTimeout(
                    f"recv src={src} tag={tag} timed out after {timeout}s")
            time.sleep(delay)
            delay = min(delay * 2, self.poll_max)

    def _consume(self, src, tag, seq):
        base = message_basename(seq, src, self.my_rank, tag)
        dat_path = os.path.join(self.job_dir, base + ".dat")
        try:
            with open(dat_path, "rb") as f:
                raw = f.read()
        except OSError as exc:
            raise TransportError(f"cannot read {dat_path}: {exc}") from exc
        # On corruption the files are left in place for diagnosis.
        ptype, h_src, h_dst, h_tag, h_seq, length = unpack_header(raw)
        payload = raw[HEADER_SIZE:]
        if (h_src, h_dst, h_tag, h_seq) != (src, self.my_rank, tag, seq):
            raise ProtocolError(
                f"header fields {(h_src, h_dst, h_tag, h_seq)} disagree with "
                f"file name {(src, self.my_rank, tag, seq)}")
        if len(payload) != length:
            raise ProtocolError(
                f"payload length {len(payload)} != header length {length}")
        os.unlink(os.path.join(self.job_dir, base + ".ok"))
        os.unlink(dat_path)
        return ptype, payload

    # -- collectives -------------------------------------------------------

    @staticmethod
    def _collective_tag(base, tag):
        if not 0 <= tag < COLLECTIVE_SLICE:
            raise ArgumentError(f"collective tag/epoch {tag} out of range")
        return base + tag

    def barrier(self, epoch, timeout=None):
        """Synchronize all ranks; no rank returns before every rank entered.

        All ranks must call with the same epoch exactly once, epochs strictly
        increasing within one job.
        """
        wire = self._collective_tag(BARRIER_BASE, epoch)
        if self.nranks == 1:
            return
        if self.my_rank == 0:
            for src in range(1, self.nranks):
                ptype, body = self.recv(src, wire, timeout=timeout,
                                        _allow_reserved=True)
                if body != b"enter":
                    raise ProtocolError(f"unexpected barrier body {body!r}")
            for dst in range(1, self.nranks):
                self.send(dst, wire, PayloadType.RAW_BYTES, b"release",
                          _allow_reserved=True)
        else:
            self.send(0, wire, PayloadType.RAW_BYTES, b"enter",
                      _allow_reserved=True)
            ptype, body = self.recv(0, wire, timeout=timeout,
                                    _allow_reserved=True)
            if body != b"release":
                raise ProtocolError(f"unexpected barrier body {body!r}")

    def gather_to_zero(self, tag, payload, payload_type=PayloadType.RAW_BYTES,
                       timeout=None):
        """Collect one payload per rank at rank 0, indexed by source rank.

        Rank 0 returns the list (own contribution at index 0); other ranks
        return None.
        """
        wire = self._collective_tag(GATHER_BASE, tag)
        if self.my_rank == 0:
            out = [bytes(payload)]
            for src in range(1, self.nranks):
                _, body = self.recv(src, wire, timeout=timeout,
                                    _allow_reserved=True)
                out.append(body)
            return out
        self.send(0, wire, payload_type, payload, _allow_reserved=True)
        return None

    def broadcast_from_zero(self, tag, payload=None,
                            payload_type=PayloadType.RAW_BYTES, timeout=None):
        """Every rank returns bytes identical to rank 0's payload."""
        wire = self._collective_tag(BCAST_BASE, tag)
        if self.my_rank == 0:
            if payload is None:
                raise ArgumentError("rank 0 must supply the broadcast payload")
            payload = bytes(payload)
            for dst in range(1, self.nranks):
                self.send(dst, wire, payload_type, payload, _allow_reserved=True)
            return payload
        _, body = self.recv(0, wire, timeout=timeout, _allow_reserved=True)
        return body


def init_context(job_dir, my_rank, nranks, **kwargs):
    """Create a FabricContext; per-channel sequence counters start at 0."""
    return FabricContext(job_dir, my_rank, nranks, **kwargs)
