"""Built-in demo programs runnable under the launcher.

``blur`` reproduces the four-processor image workflow end to end: rank 0
generates a deterministic test image, scatters it row-blocked across all
ranks, every rank applies an elementwise smoothing to its local block, and
the result is aggregated back to rank 0 and written to
``result/blur.bin`` in the typed-array wire format.

All arithmetic is small-integer so any client implementing the wire format
(in any language) reproduces the bytes exactly.
"""

import os

import numpy as np

from .errors import ArgumentError
from .pgas import agg, encode_typed_array, make_map, map_local, scatter_from_zero

BLUR_SHAPE = (64, 64)
BLUR_SCATTER_TAG = 1
BLUR_AGG_TAG = 2
BLUR_RESULT_NAME = "blur.bin"


def generate_image(shape=BLUR_SHAPE):
    """Deterministic u8 test pattern; same formula as non-Python clients."""
    i = np.arange(shape[0], dtype=np.int64)[:, None]
    j = np.arange(shape[1], dtype=np.int64)[None, :]
    return ((i * 31 + j * 17 + (i * j) % 97 * 11) % 256).astype(np.uint8)


def smooth(block):
    """Elementwise smoothing toward mid-gray, clamped to u8 range."""
    return np.clip(block.astype(np.int64) // 2 + 64, 0, 255).astype(np.uint8)


def blur_serial(shape=BLUR_SHAPE):
    """Serial oracle: the exact bytes a distributed blur run must produce."""
    return smooth(generate_image(shape))


def run_blur(ctx, args, job_dir):
    """Distributed blur; rank 0 writes the gathered result to result/."""
    dist_map = make_map(BLUR_SHAPE, (ctx.nranks, 1), ctx.nranks)
    if ctx.my_rank == 0:
        arr = scatter_from_zero(ctx, dist_map, "u8", generate_image(),
                                tag=BLUR_SCATTER_TAG)
    else:
        arr = scatter_from_zero(ctx, dist_map, "u8", tag=BLUR_SCATTER_TAG)
    out = map_local(arr, smooth)
    full = agg(out, tag=BLUR_AGG_TAG)
    if ctx.my_rank == 0:
        result_dir = os.path.join(job_dir, "result")
        os.makedirs(result_dir, exist_ok=True)
        path = os.path.join(result_dir, BLUR_RESULT_NAME)
        tmp = path + ".tmp"
        with open(tmp, "wb") as f:
            f.write(encode_typed_array(full))
        os.rename(tmp, path)
    return 0


DEMOS = {
    "blur": run_blur,
}


def get_demo(name):
    try:
        return DEMOS[name]
    except KeyError:
        raise ArgumentError(f"unknown demo program {name!r}") from None
