/**
 * End-to-end interoperability: the console acts as rank 0 of a four-rank
 * grid blur while compute-side worker processes fill ranks 1..3.  The
 * gathered result must be byte-identical to a run where every rank is a
 * compute-side process, and the console's fabric transcript must satisfy
 * the wire header contract field by field.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { dimBlock } from "../src/dist.js";
import { Session, BlurRun } from "../src/session.js";
import { readJobJson } from "../src/job.js";
import {
  GATHER_BASE,
  HEADER_SIZE,
  MAGIC,
  PayloadType,
  SCATTER_BASE,
  VERSION,
  packHeader,
} from "../src/wire.js";

const NRANKS = 4;
const ROWS = 64;
const COLS = 64;

let root: string;
let run: BlurRun;

beforeAll(async () => {
  root = fs.mkdtempSync(path.join(os.tmpdir(), "console-e2e-"));
  const session = new Session(root);
  run = await session.runBlur(NRANKS);
}, 60_000);

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

describe("four-rank grid blur with the console as rank 0", () => {
  it("completes with every rank exiting cleanly", () => {
    expect(run.record.state).toBe("Done");
    expect(Object.keys(run.record.rank_exits).sort()).toEqual(["0", "1", "2", "3"]);
    expect(Object.values(run.record.rank_exits)).toEqual([0, 0, 0, 0]);
  });

  it("persists a job record the compute side can read back", () => {
    const onDisk = readJobJson(run.record.job_dir);
    expect(onDisk.state).toBe("Done");
    expect(onDisk.spec).toEqual({
      program: "blur",
      args: [],
      ncores: NRANKS,
      location: "grid",
      user: "console",
    });
    expect(onDisk.start_time).not.toBeNull();
    expect(onDisk.end_time).not.toBeNull();
  });

  it("leaves per-rank logs and exit markers in the standard layout", () => {
    const outDir = path.join(run.record.job_dir, "out");
    for (let r = 0; r < NRANKS; r++) {
      expect(fs.existsSync(path.join(outDir, `rank_${r}.log`))).toBe(true);
      expect(fs.readFileSync(path.join(outDir, `rank_${r}.exit`), "utf-8").trim()).toBe("0");
    }
    expect(fs.readFileSync(path.join(outDir, "rank_0.log"), "utf-8")).toContain(
      `pid ${process.pid}`,
    );
  });

  it("drains the fabric directory completely", () => {
    expect(fs.readdirSync(path.join(run.record.job_dir, "fabric"))).toEqual([]);
  });

  it("produces a result file byte-identical to an all-compute-side run", () => {
    const script = [
      "import sys, tempfile",
      "from ihpc.launcher import JobManager, JobSpec, Location",
      "mgr = JobManager(tempfile.mkdtemp())",
      `rec = mgr.launch(JobSpec('blur', ${NRANKS}, Location.GRID))`,
      "assert rec.state.value == 'Done', rec.state",
      "sys.stdout.write(mgr.collect(rec.job_id)['results']['blur.bin'])",
    ].join("\n");
    const referencePath = execFileSync("python3", ["-c", script], { encoding: "utf-8" });
    const reference = fs.readFileSync(referencePath.trim());
    const mine = fs.readFileSync(path.join(run.record.job_dir, "result", "blur.bin"));
    expect(mine.length).toBe(reference.length);
    expect(mine.equals(reference)).toBe(true);
  }, 60_000);
});

describe("fabric transcript header contract", () => {
  it("has one scatter send and one gather recv per worker rank", () => {
    const sends = run.transcript.filter((e) => e.direction === "send");
    const recvs = run.transcript.filter((e) => e.direction === "recv");
    expect(sends.map((e) => e.header.dst).sort()).toEqual([1, 2, 3]);
    expect(recvs.map((e) => e.header.src).sort()).toEqual([1, 2, 3]);
  });

  it("validates every recorded header field by field", () => {
    for (const entry of run.transcript) {
      const h = entry.header;
      const buf = packHeader(h);

      // Fixed layout: magic, version, payload type, reserved zeros.
      expect(buf.length).toBe(HEADER_SIZE);
      expect(buf.toString("ascii", 0, 4)).toBe(MAGIC);
      expect(buf.readUInt8(4)).toBe(VERSION);
      expect(buf.readUInt8(5)).toBe(PayloadType.TypedArray);
      expect(buf.readUInt16LE(6)).toBe(0);

      // Addressing: scatter flows 0 -> worker, gather flows worker -> 0.
      if (entry.direction === "send") {
        expect(h.src).toBe(0);
        expect(h.dst).toBeGreaterThanOrEqual(1);
        expect(h.dst).toBeLessThan(NRANKS);
        expect(h.tag).toBe(SCATTER_BASE + 1);
      } else {
        expect(h.dst).toBe(0);
        expect(h.src).toBeGreaterThanOrEqual(1);
        expect(h.src).toBeLessThan(NRANKS);
        expect(h.tag).toBe(GATHER_BASE + 2);
      }

      // First message on each point-to-point channel.
      expect(h.seq).toBe(0);

      // Payload length: typed-array descriptor plus the rank's row block.
      const worker = entry.direction === "send" ? h.dst : h.src;
      const rows = dimBlock(ROWS, NRANKS, worker).length;
      expect(h.payloadLength).toBe(8 + 16 + rows * COLS);

      // File name fields agree with the header.
      const pad = (n: number, w: number) => n.toString().padStart(w, "0");
      expect(entry.file).toBe(
        `m_${pad(h.seq, 8)}_${pad(h.src, 5)}_${pad(h.dst, 5)}_${pad(h.tag, 10)}.dat`,
      );
    }
  });
});
