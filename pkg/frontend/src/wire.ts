/**
 * Binary wire format shared with the compute-side fabric.
 *
 * Message header (little-endian, 32 bytes):
 *   magic "IHPC" (4) | version u8=1 | payloadType u8 | reserved u16=0 |
 *   src u32 | dst u32 | tag u32 | seq u32 | payloadLength u64
 *
 * Typed-array payload:
 *   dtype u8 (1=f64, 2=i64, 3=u8) | ndim u8 | 6 reserved zero bytes |
 *   shape ndim x u64 | row-major little-endian data
 */

export const MAGIC = "IHPC";
export const VERSION = 1;
export const HEADER_SIZE = 32;

export enum PayloadType {
  RawBytes = 0,
  TypedArray = 1,
  Utf8Text = 2,
}

// Reserved tag space: the upper half of u32, one 2^28 slice per collective.
export const COLLECTIVE_BASE = 2 ** 31;
export const BARRIER_BASE = COLLECTIVE_BASE;
export const GATHER_BASE = COLLECTIVE_BASE + 2 ** 28;
export const BCAST_BASE = COLLECTIVE_BASE + 2 * 2 ** 28;
export const SCATTER_BASE = COLLECTIVE_BASE + 3 * 2 ** 28;

export interface Header {
  payloadType: PayloadType;
  src: number;
  dst: number;
  tag: number;
  seq: number;
  payloadLength: number;
}

export function messageBasename(seq: number, src: number, dst: number, tag: number): string {
  const pad = (n: number, w: number) => n.toString().padStart(w, "0");
  return `m_${pad(seq, 8)}_${pad(src, 5)}_${pad(dst, 5)}_${pad(tag, 10)}`;
}

export function packHeader(h: Header): Buffer {
  const buf = Buffer.alloc(HEADER_SIZE);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt8(VERSION, 4);
  buf.writeUInt8(h.payloadType, 5);
  buf.writeUInt16LE(0, 6);
  buf.writeUInt32LE(h.src, 8);
  buf.writeUInt32LE(h.dst, 12);
  buf.writeUInt32LE(h.tag, 16);
  buf.writeUInt32LE(h.seq, 20);
  buf.writeBigUInt64LE(BigInt(h.payloadLength), 24);
  return buf;
}

export function unpackHeader(buf: Buffer): Header {
  if (buf.length < HEADER_SIZE) {
    throw new Error(`short header: ${buf.length} bytes`);
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`bad magic ${buf.toString("hex", 0, 4)}`);
  }
  const version = buf.readUInt8(4);
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  return {
    payloadType: buf.readUInt8(5) as PayloadType,
    src: buf.readUInt32LE(8),
    dst: buf.readUInt32LE(12),
    tag: buf.readUInt32LE(16),
    seq: buf.readUInt32LE(20),
    payloadLength: Number(buf.readBigUInt64LE(24)),
  };
}

export type DtypeName = "f64" | "i64" | "u8";

const DTYPE_CODES: Record<DtypeName, number> = { f64: 1, i64: 2, u8: 3 };
const DTYPE_SIZES: Record<DtypeName, number> = { f64: 8, i64: 8, u8: 1 };
const CODE_TO_NAME: Record<number, DtypeName> = { 1: "f64", 2: "i64", 3: "u8" };

export interface TypedArray {
  dtype: DtypeName;
  shape: number[];
  /** Raw row-major little-endian element bytes. */
  data: Buffer;
}

export function encodeTypedArray(arr: TypedArray): Buffer {
  const count = arr.shape.reduce((a, b) => a * b, 1);
  if (arr.data.length !== count * DTYPE_SIZES[arr.dtype]) {
    throw new Error(`data length ${arr.data.length} does not match shape ${arr.shape}`);
  }
  const head = Buffer.alloc(8 + 8 * arr.shape.length);
  head.writeUInt8(DTYPE_CODES[arr.dtype], 0);
  head.writeUInt8(arr.shape.length, 1);
  arr.shape.forEach((extent, i) => head.writeBigUInt64LE(BigInt(extent), 8 + 8 * i));
  return Buffer.concat([head, arr.data]);
}

export function decodeTypedArray(buf: Buffer): TypedArray {
  if (buf.length < 8) {
    throw new Error("typed-array payload too short");
  }
  const dtype = CODE_TO_NAME[buf.readUInt8(0)];
  if (dtype === undefined) {
    throw new Error(`unknown dtype code ${buf.readUInt8(0)}`);
  }
  const ndim = buf.readUInt8(1);
  const shape: number[] = [];
  for (let i = 0; i < ndim; i++) {
    shape.push(Number(buf.readBigUInt64LE(8 + 8 * i)));
  }
  const data = buf.subarray(8 + 8 * ndim);
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count * DTYPE_SIZES[dtype]) {
    throw new Error(`typed-array body ${data.length} bytes, expected ${count * DTYPE_SIZES[dtype]}`);
  }
  return { dtype, shape, data: Buffer.from(data) };
}
