/**
 * Interactive console entry point.
 *
 * Commands:
 *   run <nranks>   launch an nranks-wide grid blur, acting as rank 0
 *   show           redisplay the last result raster
 *   wire           dump the fabric transcript of the last run
 *   quit           leave the console
 */

import * as readline from "node:readline";

import { Session, BlurRun } from "./session.js";

export async function main(argv = process.argv.slice(2)): Promise<void> {
  const root = argv[0] ?? process.cwd();
  const session = new Session(root);
  const rl = readline.createInterface({ input: process.stdin, output: process.stdout });
  const ask = (q: string) => new Promise<string>((resolve) => rl.question(q, resolve));
  let last: BlurRun | null = null;

  console.log(`console session over ${root} (run <nranks> | show | wire | quit)`);
  for (;;) {
    const line = (await ask("> ")).trim();
    const [cmd, arg] = line.split(/\s+/);
    if (cmd === "quit" || cmd === "exit") {
      break;
    } else if (cmd === "run") {
      const nranks = parseInt(arg ?? "4", 10);
      if (!Number.isInteger(nranks) || nranks < 1) {
        console.log("usage: run <nranks>");
        continue;
      }
      try {
        last = await session.runBlur(nranks);
        console.log(`job ${last.record.job_id} ${last.record.state}`);
        console.log(session.renderResult(last));
      } catch (err) {
        console.log(`run failed: ${err}`);
      }
    } else if (cmd === "show") {
      console.log(last ? session.renderResult(last) : "no result yet");
    } else if (cmd === "wire") {
      if (!last) {
        console.log("no run yet");
        continue;
      }
      for (const entry of last.transcript) {
        const h = entry.header;
        console.log(
          `${entry.direction} ${entry.file} src=${h.src} dst=${h.dst} ` +
            `tag=${h.tag} seq=${h.seq} len=${h.payloadLength}`,
        );
      }
    } else if (cmd !== "") {
      console.log(`unknown command: ${cmd}`);
    }
  }
  rl.close();
}

const isDirectRun = process.argv[1]?.endsWith("console.js") || process.argv[1]?.endsWith("console.ts");
if (isDirectRun) {
  main().catch((err) => {
    console.error(err);
    process.exit(1);
  });
}
