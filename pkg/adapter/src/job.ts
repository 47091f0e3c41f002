/**
 * Job file contract: `adapter train --job job.json`.
 *
 * Dataset paths use the pipeline's CSV schema; corpus_jsonl supplies the
 * publication text the CSVs reference. `model` is a built-in preset name
 * (mini, mini-wide) or a path to a previously saved model directory to
 * continue from.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface AdapterJob {
  train_csv: string;
  val_csv: string;
  test_csv: string;
  corpus_jsonl: string;
  model: string;
  output_dir: string;
  max_train_samples: number;
  max_eval_samples: number;
  max_seq_length: number;
  epochs: number;
  batch_size: number;
  gradient_accumulation_steps: number;
  eval_steps: number;
  learning_rate: number;
  seed: number;
}

export class JobError extends Error {
  constructor(
    public kind: string,
    message: string,
  ) {
    super(message);
  }
}

const DEFAULTS = {
  model: "mini",
  max_train_samples: 30000,
  max_eval_samples: 10000,
  max_seq_length: 512,
  epochs: 1,
  batch_size: 16,
  gradient_accumulation_steps: 4,
  eval_steps: 100,
  learning_rate: 0.005,
  seed: 42,
} as const;

const REQUIRED_PATHS = ["train_csv", "val_csv", "test_csv", "corpus_jsonl"] as const;
const POSITIVE_FIELDS = [
  "max_train_samples",
  "max_eval_samples",
  "max_seq_length",
  "epochs",
  "batch_size",
  "gradient_accumulation_steps",
  "eval_steps",
  "learning_rate",
] as const;

export function loadJob(jobPath: string): AdapterJob {
  if (!fs.existsSync(jobPath)) throw new JobError("missing_job", `job file not found: ${jobPath}`);
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(jobPath, "utf-8"));
  } catch (err) {
    throw new JobError("bad_job", `job file is not valid JSON: ${err}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new JobError("bad_job", "job file must hold a JSON object");
  }
  const doc = raw as Record<string, unknown>;
  const base = path.dirname(path.resolve(jobPath));
  const resolve = (p: string) => (path.isAbsolute(p) ? p : path.join(base, p));

  for (const key of REQUIRED_PATHS) {
    if (typeof doc[key] !== "string" || !(doc[key] as string)) {
      throw new JobError("bad_job", `job is missing required path field ${key}`);
    }
  }
  if (typeof doc.output_dir !== "string" || !doc.output_dir) {
    throw new JobError("bad_job", "job is missing output_dir");
  }

  const job: AdapterJob = {
    train_csv: resolve(doc.train_csv as string),
    val_csv: resolve(doc.val_csv as string),
    test_csv: resolve(doc.test_csv as string),
    corpus_jsonl: resolve(doc.corpus_jsonl as string),
    output_dir: resolve(doc.output_dir as string),
    model: typeof doc.model === "string" && doc.model ? (doc.model as string) : DEFAULTS.model,
    max_train_samples: num(doc, "max_train_samples"),
    max_eval_samples: num(doc, "max_eval_samples"),
    max_seq_length: num(doc, "max_seq_length"),
    epochs: num(doc, "epochs"),
    batch_size: num(doc, "batch_size"),
    gradient_accumulation_steps: num(doc, "gradient_accumulation_steps"),
    eval_steps: num(doc, "eval_steps"),
    learning_rate: num(doc, "learning_rate"),
    seed: num(doc, "seed"),
  };

  for (const key of REQUIRED_PATHS) {
    if (!fs.existsSync(job[key])) {
      throw new JobError("missing_input", `${key} path does not exist: ${job[key]}`);
    }
  }
  for (const key of POSITIVE_FIELDS) {
    if (!(job[key] > 0)) throw new JobError("bad_job", `${key} must be positive, got ${job[key]}`);
  }
  return job;
}

function num(doc: Record<string, unknown>, key: keyof typeof DEFAULTS & string): number {
  const value = doc[key];
  if (value === undefined) return DEFAULTS[key] as number;
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new JobError("bad_job", `${key} must be a finite number`);
  }
  return value;
}
