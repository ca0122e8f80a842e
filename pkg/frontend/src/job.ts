/**
 * Job directory management and worker-rank spawning.
 *
 * A job lives under `<root>/jobs/<job_id>/` with `fabric/` (message
 * files), `out/` (per-rank logs and exit markers), `result/` (rank 0
 * output files) and `job.json` (lifecycle record, rewritten atomically).
 * Worker ranks are compute-side processes started with
 * `python3 -m ihpc.worker <program>` and handed their identity through
 * the IHPC_JOB_DIR, IHPC_RANK and IHPC_NRANKS environment variables.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import * as crypto from "node:crypto";
import { ChildProcess, spawn } from "node:child_process";

export const ENV_JOB_DIR = "IHPC_JOB_DIR";
export const ENV_RANK = "IHPC_RANK";
export const ENV_NRANKS = "IHPC_NRANKS";

export type JobState = "Pending" | "Running" | "Done" | "Failed" | "Aborted";

export interface JobRecordJson {
  job_id: string;
  spec: {
    program: string;
    args: string[];
    ncores: number;
    location: string;
    user: string;
  };
  state: JobState;
  job_dir: string;
  submit_time: number;
  start_time: number | null;
  end_time: number | null;
  rank_exits: Record<string, number>;
  pids: Record<string, number>;
  cores_released: boolean;
  echo_lines: string[];
}

const nowS = () => Date.now() / 1000;

export function writeJobJson(jobDir: string, record: JobRecordJson): void {
  const target = path.join(jobDir, "job.json");
  const tmp = `${target}.tmp${process.pid}`;
  fs.writeFileSync(tmp, JSON.stringify(record, null, 2) + "\n");
  fs.renameSync(tmp, target);
}

export function readJobJson(jobDir: string): JobRecordJson {
  return JSON.parse(fs.readFileSync(path.join(jobDir, "job.json"), "utf-8"));
}

export function createJobDir(root: string, program: string, ncores: number, user: string): JobRecordJson {
  const jobsRoot = path.join(root, "jobs");
  fs.mkdirSync(jobsRoot, { recursive: true });
  const count = fs.readdirSync(jobsRoot).length;
  const jobId = `${count.toString().padStart(6, "0")}_${crypto.randomBytes(4).toString("hex")}`;
  const jobDir = path.join(jobsRoot, jobId);
  for (const sub of ["fabric", "out", "result"]) {
    fs.mkdirSync(path.join(jobDir, sub), { recursive: true });
  }
  const record: JobRecordJson = {
    job_id: jobId,
    spec: { program, args: [], ncores, location: "grid", user },
    state: "Pending",
    job_dir: jobDir,
    submit_time: nowS(),
    start_time: null,
    end_time: null,
    rank_exits: {},
    pids: {},
    cores_released: true,
    echo_lines: [],
  };
  writeJobJson(jobDir, record);
  return record;
}

/** Spawn one worker rank; its log goes to out/rank_<r>.log. */
export function spawnWorker(
  record: JobRecordJson,
  rank: number,
  python = "python3",
): ChildProcess {
  const logPath = path.join(record.job_dir, "out", `rank_${rank}.log`);
  const logFd = fs.openSync(logPath, "w");
  const child = spawn(python, ["-m", "ihpc.worker", record.spec.program, ...record.spec.args], {
    env: {
      ...process.env,
      [ENV_JOB_DIR]: record.job_dir,
      [ENV_RANK]: String(rank),
      [ENV_NRANKS]: String(record.spec.ncores),
    },
    stdio: ["ignore", logFd, logFd],
  });
  fs.closeSync(logFd);
  return child;
}

export function writeExitMarker(jobDir: string, rank: number, code: number): void {
  const target = path.join(jobDir, "out", `rank_${rank}.exit`);
  fs.writeFileSync(`${target}.tmp`, `${code}\n`);
  fs.renameSync(`${target}.tmp`, target);
}

export function readExitMarkers(jobDir: string, ncores: number): Record<string, number> {
  const exits: Record<string, number> = {};
  for (let rank = 0; rank < ncores; rank++) {
    const marker = path.join(jobDir, "out", `rank_${rank}.exit`);
    try {
      exits[String(rank)] = parseInt(fs.readFileSync(marker, "utf-8").trim(), 10);
    } catch {
      // not finished yet
    }
  }
  return exits;
}
