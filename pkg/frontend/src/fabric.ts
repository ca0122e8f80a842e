/**
 * Rank 0's end of the directory-backed message fabric.
 *
 * Sending writes the payload to a temporary name, renames it to the final
 * `.dat`, then creates the zero-length `.ok` marker -- the marker is the
 * commit point, so a visible marker always means a complete payload.
 * Receiving polls for the lowest-sequence matching marker and deletes both
 * files after the read.
 *
 * Every send and receive is appended to a transcript so a session can be
 * audited against the header spec field by field.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  HEADER_SIZE,
  Header,
  PayloadType,
  messageBasename,
  packHeader,
  unpackHeader,
} from "./wire.js";

export interface TranscriptEntry {
  direction: "send" | "recv";
  file: string;
  header: Header;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class FabricClient {
  readonly dir: string;
  readonly myRank: number;
  readonly nranks: number;
  readonly transcript: TranscriptEntry[] = [];
  private readonly sendSeq = new Map<number, number>();
  private readonly pollInitialMs: number;
  private readonly pollMaxMs: number;

  constructor(dir: string, myRank: number, nranks: number, pollInitialMs = 2, pollMaxMs = 50) {
    if (myRank < 0 || myRank >= nranks) {
      throw new Error(`rank ${myRank} out of range for nranks=${nranks}`);
    }
    this.dir = dir;
    this.myRank = myRank;
    this.nranks = nranks;
    this.pollInitialMs = pollInitialMs;
    this.pollMaxMs = pollMaxMs;
  }

  send(dst: number, tag: number, payloadType: PayloadType, payload: Buffer): number {
    if (dst === this.myRank) {
      throw new Error("send to self is not supported");
    }
    const seq = this.sendSeq.get(dst) ?? 0;
    const header: Header = {
      payloadType,
      src: this.myRank,
      dst,
      tag,
      seq,
      payloadLength: payload.length,
    };
    const base = messageBasename(seq, this.myRank, dst, tag);
    const datPath = path.join(this.dir, `${base}.dat`);
    const tmpPath = path.join(this.dir, `.tmp_${base}_${process.pid}`);
    const fd = fs.openSync(tmpPath, "w");
    try {
      fs.writeSync(fd, packHeader(header));
      fs.writeSync(fd, payload);
      fs.fsyncSync(fd);
    } finally {
      fs.closeSync(fd);
    }
    fs.renameSync(tmpPath, datPath);
    fs.closeSync(fs.openSync(path.join(this.dir, `${base}.ok`), "wx"));
    this.sendSeq.set(dst, seq + 1);
    this.transcript.push({ direction: "send", file: `${base}.dat`, header });
    return seq;
  }

  private readySeqs(src: number, tag: number): number[] {
    const pad = (n: number, w: number) => n.toString().padStart(w, "0");
    const suffix = `_${pad(src, 5)}_${pad(this.myRank, 5)}_${pad(tag, 10)}.ok`;
    return fs
      .readdirSync(this.dir)
      .filter((name) => name.startsWith("m_") && name.endsWith(suffix))
      .map((name) => parseInt(name.slice(2, 10), 10))
      .sort((a, b) => a - b);
  }

  probe(src: number, tag: number): boolean {
    return this.readySeqs(src, tag).length > 0;
  }

  async recv(src: number, tag: number, timeoutMs = 60_000): Promise<{ header: Header; payload: Buffer }> {
    const deadline = Date.now() + timeoutMs;
    let delay = this.pollInitialMs;
    for (;;) {
      const seqs = this.readySeqs(src, tag);
      if (seqs.length > 0) {
        return this.consume(src, tag, seqs[0]);
      }
      if (Date.now() >= deadline) {
        throw new Error(`recv src=${src} tag=${tag} timed out after ${timeoutMs}ms`);
      }
      await sleep(delay);
      delay = Math.min(delay * 2, this.pollMaxMs);
    }
  }

  private consume(src: number, tag: number, seq: number): { header: Header; payload: Buffer } {
    const base = messageBasename(seq, src, this.myRank, tag);
    const raw = fs.readFileSync(path.join(this.dir, `${base}.dat`));
    const header = unpackHeader(raw);
    const payload = raw.subarray(HEADER_SIZE);
    if (header.src !== src || header.dst !== this.myRank || header.tag !== tag || header.seq !== seq) {
      throw new Error(`header fields disagree with file name ${base}`);
    }
    if (payload.length !== header.payloadLength) {
      throw new Error(`payload length ${payload.length} != header ${header.payloadLength}`);
    }
    fs.unlinkSync(path.join(this.dir, `${base}.ok`));
    fs.unlinkSync(path.join(this.dir, `${base}.dat`));
    this.transcript.push({ direction: "recv", file: `${base}.dat`, header });
    return { header, payload: Buffer.from(payload) };
  }
}
