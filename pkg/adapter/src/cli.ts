#!/usr/bin/env node
/**
 * adapter train --job job.json
 *
 * Reads the job description, fine-tunes the classifier, and writes
 * metrics.json (shared report schema), a model directory, and a training
 * log under the job's output_dir. Any failure is reported as structured
 * error JSON on stdout with a nonzero exit code.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { DataError } from "./data.js";
import { JobError, loadJob } from "./job.js";
import { runFinetune } from "./train.js";

function fail(kind: string, message: string, outputDir: string | null): never {
  const doc = { error: { kind, message } };
  const text = JSON.stringify(doc, null, 2) + "\n";
  process.stdout.write(text);
  if (outputDir) {
    try {
      fs.mkdirSync(outputDir, { recursive: true });
      fs.writeFileSync(path.join(outputDir, "error.json"), text, "utf-8");
    } catch {
      // the stdout report is the contract; the file is best effort
    }
  }
  process.exit(1);
}

export function main(argv: string[]): void {
  const [command, ...rest] = argv;
  if (command !== "train") {
    process.stderr.write("usage: adapter train --job <job.json>\n");
    process.exit(2);
  }
  const jobFlag = rest.indexOf("--job");
  if (jobFlag < 0 || jobFlag + 1 >= rest.length) {
    process.stderr.write("usage: adapter train --job <job.json>\n");
    process.exit(2);
  }

  let outputDir: string | null = null;
  try {
    const job = loadJob(rest[jobFlag + 1]);
    outputDir = job.output_dir;
    const result = runFinetune(job);
    const summary = {
      ok: true,
      metrics: result.metricsPath,
      model: result.modelDir,
      test_accuracy: result.metrics.accuracy,
    };
    process.stdout.write(JSON.stringify(summary) + "\n");
  } catch (err) {
    if (err instanceof JobError || err instanceof DataError) {
      fail(err.kind, err.message, outputDir);
    }
    fail("internal", String(err instanceof Error ? err.stack ?? err.message : err), outputDir);
  }
}

main(process.argv.slice(2));
