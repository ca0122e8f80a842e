/**
 * Block-distribution arithmetic, identical to the compute side: along a
 * dimension of extent n over g ranks, the first n mod g ranks own
 * ceil(n/g) indices and the rest floor(n/g); ranks map to grid
 * coordinates in row-major order.
 */

export interface DimBlock {
  start: number;
  length: number;
}

export function dimBlock(extent: number, g: number, coord: number): DimBlock {
  const base = Math.floor(extent / g);
  const rem = extent % g;
  if (coord < rem) {
    return { start: coord * (base + 1), length: base + 1 };
  }
  return { start: rem * (base + 1) + (coord - rem) * base, length: base };
}

export function rankCoords(grid: number[], rank: number): number[] {
  const coords: number[] = [];
  let r = rank;
  for (let i = grid.length - 1; i >= 0; i--) {
    coords.unshift(r % grid[i]);
    r = Math.floor(r / grid[i]);
  }
  return coords;
}

/** Per-dimension half-open global ranges owned by `rank`. */
export function localExtent(shape: number[], grid: number[], rank: number): DimBlock[] {
  const coords = rankCoords(grid, rank);
  return shape.map((extent, d) => dimBlock(extent, grid[d], coords[d]));
}
