"""PGAS-style distributed arrays over the file-system message fabric.

A :class:`DistMap` assigns every index of a 1-D or 2-D global array to
exactly one (rank, local index) pair using block distribution: along a
dimension of extent ``n`` split over ``g`` ranks, the first ``n mod g``
ranks get ``ceil(n/g)`` elements and the rest get ``floor(n/g)``.  Ranks
map to grid coordinates in row-major order.

Blocks travel between ranks as typed-array payloads with this byte layout
(little-endian)::

    dtype   u8   (1=f64, 2=i64, 3=u8)
    ndim    u8
    reserved 6 bytes of zero
    shape   ndim x u64
    data    row-major little-endian values

Zero-length local blocks are legal and serialize as shape-bearing empty
payloads.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ProtocolError
from .msgfabric import SCATTER_BASE, FabricContext, PayloadType

DTYPE_CODES = {"f64": 1, "i64": 2, "u8": 3}
NUMPY_DTYPES = {"f64": np.dtype("<f8"), "i64": np.dtype("<i8"), "u8": np.dtype("u1")}
CODE_TO_NAME = {v: k for k, v in DTYPE_CODES.items()}


def encode_typed_array(arr):
    """Serialize a numpy array (f64/i64/u8) to the typed-array wire format."""
    name = _dtype_name(arr.dtype)
    arr = np.ascontiguousarray(arr, dtype=NUMPY_DTYPES[name])
    header = struct.pack("<BB6x", DTYPE_CODES[name], arr.ndim)
    shape = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return header + shape + arr.tobytes()


def decode_typed_array(data):
    """Inverse of :func:`encode_typed_array`."""
    if len(data) < 8:
        raise ProtocolError("typed-array payload too short")
    code, ndim = struct.unpack_from("<BB", data)
    if code not in CODE_TO_NAME:
        raise ProtocolError(f"unknown dtype code {code}")
    shape_end = 8 + 8 * ndim
    if len(data) < shape_end:
        raise ProtocolError("typed-array payload truncated in shape")
    shape = struct.unpack_from(f"<{ndim}Q", data, 8) if ndim else ()
    dtype = NUMPY_DTYPES[CODE_TO_NAME[code]]
    count = math.prod(shape)
    body = data[shape_end:]
    if len(body) != count * dtype.itemsize:
        raise ProtocolError(
            f"typed-array body {len(body)} bytes, expected {count * dtype.itemsize}")
    return np.frombuffer(body, dtype=dtype).reshape(shape).copy()


def _dtype_name(dtype):
    dtype = np.dtype(dtype)
    for name, nd in NUMPY_DTYPES.items():
        if dtype == nd:
            return name
    raise ArgumentError(f"unsupported dtype {dtype}; use f64, i64 or u8")


@dataclass(frozen=True)
class DistMap:
    """Block-distribution descriptor for a 1-D or 2-D global array."""

    global_shape: tuple
    grid: tuple

    def __post_init__(self):
        object.__setattr__(self, "global_shape", tuple(int(n) for n in self.global_shape))
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        if not 1 <= len(self.global_shape) <= 2:
            raise ArgumentError("only 1-D and 2-D arrays are supported")
        if len(self.grid) != len(self.global_shape):
            raise ArgumentError("grid and global_shape must have the same length")
        if any(n <= 0 for n in self.global_shape):
            raise ArgumentError(f"zero or negative extent in {self.global_shape}")
        if any(g <= 0 for g in self.grid):
            raise ArgumentError(f"zero or negative grid factor in {self.grid}")

    @property
    def nranks(self):
        return math.prod(self.grid)

    @property
    def ndim(self):
        return len(self.global_shape)

    def rank_coords(self, rank):
        """Grid coordinates of ``rank`` (row-major rank ordering)."""
        if not 0 <= rank < self.nranks:
            raise ArgumentError(f"rank {rank} out of range for grid {self.grid}")
        coords = []
        for g in reversed(self.grid):
            coords.append(rank % g)
            rank //= g
        return tuple(reversed(coords))

    def coords_to_rank(self, coords):
        rank = 0
        for c, g in zip(coords, self.grid):
            rank = rank * g + c
        return rank


def make_map(global_shape, grid, nranks):
    """Build a DistMap; ``product(grid)`` must equal ``nranks``."""
    m = DistMap(tuple(global_shape), tuple(grid))
    if m.nranks != nranks:
        raise ArgumentError(
            f"grid {m.grid} covers {m.nranks} ranks, expected {nranks}")
    return m


def _dim_block(extent, g, coord):
    """(start, length) of grid coordinate ``coord`` along one dimension."""
    base, rem = divmod(extent, g)
    if coord < rem:
        start = coord * (base + 1)
        length = base + 1
    else:
        start = rem * (base + 1) + (coord - rem) * base
        length = base
    return start, length


def local_extent(dist_map, rank):
    """Per-dim half-open (start, length) global ranges owned by ``rank``.

    Lengths may be 0 when there are more ranks than elements along a dim.
    """
    coords = dist_map.rank_coords(rank)
    return tuple(_dim_block(n, g, c)
                 for n, g, c in zip(dist_map.global_shape, dist_map.grid, coords))


def global_to_local(dist_map, global_index):
    """Owning (rank, local_index) of one global index."""
    gi = _as_index(global_index, dist_map.ndim)
    coords = []
    local = []
    for idx, (n, g) in zip(gi, zip(dist_map.global_shape, dist_map.grid)):
        if not 0 <= idx < n:
            raise ArgumentError(f"global index {gi} out of bounds for {dist_map.global_shape}")
        base, rem = divmod(n, g)
        split = rem * (base + 1)
        if idx < split:
            c, l = divmod(idx, base + 1)
        else:
            c, l = divmod(idx - split, base)
            c += rem
        coords.append(c)
        local.append(l)
    rank = dist_map.coords_to_rank(coords)
    return rank, _pack_index(local, dist_map.ndim)


def local_to_global(dist_map, rank, local_index):
    """Inverse of :func:`global_to_local` for indices within the local block."""
    li = _as_index(local_index, dist_map.ndim)
    ext = local_extent(dist_map, rank)
    out = []
    for idx, (start, length) in zip(li, ext):
        if not 0 <= idx < length:
            raise ArgumentError(f"local index {li} outside local extent {ext}")
        out.append(start + idx)
    return _pack_index(out, dist_map.ndim)


def _as_index(index, ndim):
    if ndim == 1 and isinstance(index, int):
        return (index,)
    index = tuple(index) if not isinstance(index, int) else (index,)
    if len(index) != ndim:
        raise ArgumentError(f"index {index} has wrong dimensionality")
    return index


def _pack_index(parts, ndim):
    return parts[0] if ndim == 1 else tuple(parts)


@dataclass
class DistArray:
    """One rank's view of a globally shaped array: map + local block."""

    map: DistMap
    dtype: str
    local_block: np.ndarray
    ctx: FabricContext = field(repr=False)

    def __post_init__(self):
        expected = tuple(l for _, l in local_extent(self.map, self.ctx.my_rank))
        if tuple(self.local_block.shape) != expected:
            raise ArgumentError(
                f"local block shape {self.local_block.shape} != owned extent {expected}")


def _local_slices(ext):
    return tuple(slice(start, start + length) for start, length in ext)


def scatter_from_zero(ctx, dist_map, dtype, global_values=None, tag=1):
    """Distribute a full global array from rank 0; collective call.

    Rank 0 keeps its own block without a self-send; every other rank
    receives exactly its block.
    """
    if dist_map.nranks != ctx.nranks:
        raise ArgumentError(
            f"map covers {dist_map.nranks} ranks but context has {ctx.nranks}")
    npdtype = NUMPY_DTYPES[dtype] if isinstance(dtype, str) else NUMPY_DTYPES[_dtype_name(dtype)]
    name = _dtype_name(npdtype)
    if ctx.my_rank == 0:
        if global_values is None:
            raise ArgumentError("rank 0 must supply global_values")
        full = np.asarray(global_values, dtype=npdtype).reshape(dist_map.global_shape)
        for rank in range(1, ctx.nranks):
            block = full[_local_slices(local_extent(dist_map, rank))]
            ctx.send(rank, SCATTER_BASE + tag, PayloadType.TYPED_ARRAY,
                     encode_typed_array(block), _allow_reserved=True)
        local = full[_local_slices(local_extent(dist_map, 0))].copy()
    else:
        ptype, body = ctx.recv(0, SCATTER_BASE + tag, _allow_reserved=True)
        if ptype != PayloadType.TYPED_ARRAY:
            raise ProtocolError(f"scatter expected typed array, got {ptype}")
        local = decode_typed_array(body)
    return DistArray(map=dist_map, dtype=name, local_block=local, ctx=ctx)


def agg(arr, tag=2):
    """Aggregate all local blocks to rank 0; collective call.

    Rank 0 returns the full row-major global array; other ranks return None.
    """
    ctx = arr.ctx
    encoded = encode_typed_array(arr.local_block)
    parts = ctx.gather_to_zero(tag, encoded, payload_type=PayloadType.TYPED_ARRAY)
    if ctx.my_rank != 0:
        return None
    full = np.empty(arr.map.global_shape, dtype=NUMPY_DTYPES[arr.dtype])
    for rank, body in enumerate(parts):
        block = decode_typed_array(body)
        full[_local_slices(local_extent(arr.map, rank))] = block
    return full


def map_local(arr, f):
    """Apply a pure elementwise function to the local block; no communication."""
    out = np.asarray(f(arr.local_block), dtype=NUMPY_DTYPES[arr.dtype])
    out = out.reshape(arr.local_block.shape)
    return DistArray(map=arr.map, dtype=arr.dtype, local_block=out, ctx=arr.ctx)
