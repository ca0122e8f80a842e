/**
 * An interactive desktop session against the compute side.
 *
 * `runBlur` launches an n-rank blur job in grid mode: worker ranks 1..n-1
 * are spawned as compute-side processes and the session itself acts as
 * rank 0, so the assembled result lands directly in the caller's hands.
 * The job directory, job.json record, fabric messages and result file all
 * follow the compute-side schemas, so either side can inspect a job the
 * other ran.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { ChildProcess } from "node:child_process";

import { FabricClient, TranscriptEntry } from "./fabric.js";
import {
  JobRecordJson,
  createJobDir,
  readExitMarkers,
  spawnWorker,
  writeExitMarker,
  writeJobJson,
} from "./job.js";
import { encodeResult, renderImage, runBlurRank0 } from "./blur.js";

export interface BlurRun {
  record: JobRecordJson;
  image: Buffer;
  transcript: TranscriptEntry[];
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

function waitExit(child: ChildProcess): Promise<number> {
  return new Promise((resolve, reject) => {
    child.once("error", reject);
    child.once("exit", (code, signal) => resolve(code ?? (signal ? 1 : 0)));
  });
}

export class Session {
  readonly root: string;
  readonly user: string;
  readonly python: string;

  constructor(root: string, user = "console", python = "python3") {
    this.root = root;
    this.user = user;
    this.python = python;
  }

  /** Run an nranks-wide grid blur with this session as rank 0. */
  async runBlur(nranks: number): Promise<BlurRun> {
    if (nranks < 1) {
      throw new Error("nranks must be >= 1");
    }
    const record = createJobDir(this.root, "blur", nranks, this.user);
    const workers: ChildProcess[] = [];
    for (let rank = 1; rank < nranks; rank++) {
      const child = spawnWorker(record, rank, this.python);
      workers.push(child);
      record.pids[String(rank)] = child.pid ?? -1;
      record.echo_lines.push(`launching rank ${rank} of ${nranks} (pid ${child.pid})`);
    }
    record.echo_lines.push(`launching rank 0 of ${nranks} inline (pid ${process.pid})`);
    record.state = "Running";
    record.start_time = Date.now() / 1000;
    writeJobJson(record.job_dir, record);

    const fabric = new FabricClient(path.join(record.job_dir, "fabric"), 0, nranks);
    const logPath = path.join(record.job_dir, "out", "rank_0.log");
    fs.writeFileSync(logPath, `rank 0 of ${nranks} pid ${process.pid} starting blur (inline)\n`);
    let image: Buffer;
    let code = 0;
    try {
      image = await runBlurRank0(fabric);
      const resultPath = path.join(record.job_dir, "result", "blur.bin");
      fs.writeFileSync(`${resultPath}.tmp`, encodeResult(image));
      fs.renameSync(`${resultPath}.tmp`, resultPath);
    } catch (err) {
      code = 1;
      fs.appendFileSync(logPath, `${err}\n`);
      throw err;
    } finally {
      fs.appendFileSync(logPath, `rank 0 exiting with code ${code}\n`);
      writeExitMarker(record.job_dir, 0, code);
      const workerCodes = await Promise.all(workers.map(waitExit));
      record.rank_exits = readExitMarkers(record.job_dir, nranks);
      const allZero = code === 0 && workerCodes.every((c) => c === 0);
      record.state = allZero && Object.keys(record.rank_exits).length === nranks ? "Done" : "Failed";
      record.end_time = Date.now() / 1000;
      writeJobJson(record.job_dir, record);
    }
    return { record, image, transcript: fabric.transcript };
  }

  /** Wait for a job started elsewhere to reach a terminal exit-marker set. */
  async watch(jobDir: string, ncores: number, timeoutMs = 60_000): Promise<Record<string, number>> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const exits = readExitMarkers(jobDir, ncores);
      if (Object.keys(exits).length === ncores) {
        return exits;
      }
      if (Date.now() >= deadline) {
        throw new Error(`job in ${jobDir} did not finish within ${timeoutMs}ms`);
      }
      await sleep(50);
    }
  }

  renderResult(run: BlurRun): string {
    return renderImage(run.image);
  }
}
