/**
 * Rank 0's half of the distributed blur program.
 *
 * The image is a 64x64 u8 test pattern generated from a fixed integer
 * formula, row-blocked over all ranks.  Rank 0 scatters the worker blocks,
 * smooths its own block, gathers the smoothed blocks back, and assembles
 * the full image.  The arithmetic is integer-exact so the result is
 * bit-identical to a compute-side-only run.
 */

import { FabricClient } from "./fabric.js";
import { localExtent } from "./dist.js";
import { PayloadType, SCATTER_BASE, GATHER_BASE, TypedArray, decodeTypedArray, encodeTypedArray } from "./wire.js";

export const BLUR_SHAPE: [number, number] = [64, 64];
export const BLUR_SCATTER_TAG = SCATTER_BASE + 1;
export const BLUR_AGG_TAG = GATHER_BASE + 2;

export function generateImage(shape: [number, number] = BLUR_SHAPE): Buffer {
  const [rows, cols] = shape;
  const out = Buffer.alloc(rows * cols);
  for (let i = 0; i < rows; i++) {
    for (let j = 0; j < cols; j++) {
      out[i * cols + j] = (i * 31 + j * 17 + ((i * j) % 97) * 11) % 256;
    }
  }
  return out;
}

export function smooth(block: Buffer): Buffer {
  const out = Buffer.alloc(block.length);
  for (let i = 0; i < block.length; i++) {
    out[i] = Math.min(255, Math.max(0, Math.floor(block[i] / 2) + 64));
  }
  return out;
}

function rowBlock(image: Buffer, cols: number, start: number, length: number): Buffer {
  return image.subarray(start * cols, (start + length) * cols);
}

/**
 * Drive rank 0 of an nranks-wide blur job over the given fabric directory.
 * Returns the assembled full image.
 */
export async function runBlurRank0(fabric: FabricClient): Promise<Buffer> {
  const [rows, cols] = BLUR_SHAPE;
  const grid = [fabric.nranks, 1];
  const image = generateImage();

  for (let rank = 1; rank < fabric.nranks; rank++) {
    const [rowExt] = localExtent(BLUR_SHAPE, grid, rank);
    const block: TypedArray = {
      dtype: "u8",
      shape: [rowExt.length, cols],
      data: Buffer.from(rowBlock(image, cols, rowExt.start, rowExt.length)),
    };
    fabric.send(rank, BLUR_SCATTER_TAG, PayloadType.TypedArray, encodeTypedArray(block));
  }

  const [myExt] = localExtent(BLUR_SHAPE, grid, 0);
  const myBlock = smooth(rowBlock(image, cols, myExt.start, myExt.length));

  const full = Buffer.alloc(rows * cols);
  myBlock.copy(full, myExt.start * cols);
  for (let rank = 1; rank < fabric.nranks; rank++) {
    const { payload } = await fabric.recv(rank, BLUR_AGG_TAG);
    const block = decodeTypedArray(payload);
    const [rowExt] = localExtent(BLUR_SHAPE, grid, rank);
    if (block.shape[0] !== rowExt.length || block.shape[1] !== cols) {
      throw new Error(`rank ${rank} returned block ${block.shape}, expected [${rowExt.length}, ${cols}]`);
    }
    block.data.copy(full, rowExt.start * cols);
  }
  return full;
}

/** Encode a full image as the result-file typed-array bytes. */
export function encodeResult(image: Buffer, shape: [number, number] = BLUR_SHAPE): Buffer {
  return encodeTypedArray({ dtype: "u8", shape: [...shape], data: image });
}

/** min/mean/max plus a coarse text raster, for inline display. */
export function renderImage(image: Buffer, shape: [number, number] = BLUR_SHAPE): string {
  const [rows, cols] = shape;
  let min = 255;
  let max = 0;
  let sum = 0;
  for (const v of image) {
    min = Math.min(min, v);
    max = Math.max(max, v);
    sum += v;
  }
  const mean = sum / image.length;
  const ramp = " .:-=+*#%@";
  const outRows = 16;
  const outCols = 32;
  const lines: string[] = [`u8[${rows}x${cols}] min=${min} mean=${mean.toFixed(1)} max=${max}`];
  for (let r = 0; r < outRows; r++) {
    let line = "";
    for (let c = 0; c < outCols; c++) {
      const i = Math.floor((r * rows) / outRows);
      const j = Math.floor((c * cols) / outCols);
      const v = image[i * cols + j];
      const idx = max > min ? Math.floor(((v - min) / (max - min)) * (ramp.length - 1)) : 0;
      line += ramp[idx];
    }
    lines.push(line);
  }
  return lines.join("\n");
}
