/**
 * Fine-tuning loop: Adam over mini-batches with gradient accumulation,
 * periodic validation, and a metrics document for the held-out test split.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import {
  buildExamples,
  capExamples,
  DataError,
  Example,
  labelCounts,
  readCorpusText,
  requireBothClasses,
} from "./data.js";
import { AdapterJob, JobError } from "./job.js";
import { confusion, MetricsDoc, metricsDoc } from "./metrics.js";
import {
  forwardBackward,
  Grads,
  initParams,
  ModelConfig,
  Params,
  positionTable,
  predictProb,
  PRESETS,
  deserialize,
  serialize,
  zeroGrads,
} from "./model.js";
import type { Mat } from "./tensor.js";
import { Rng } from "./rng.js";

export interface TrainResult {
  metrics: MetricsDoc;
  metricsPath: string;
  modelDir: string;
  log: { step: number; trainLoss: number; valAccuracy: number }[];
}

interface AdamState {
  m: Float64Array;
  v: Float64Array;
}

class Adam {
  private states = new Map<string, AdamState>();
  private t = 0;

  constructor(
    private lr: number,
    private beta1 = 0.9,
    private beta2 = 0.999,
    private eps = 1e-8,
  ) {}

  beginStep(): void {
    this.t += 1;
  }

  update(name: string, values: Float64Array, grads: Float64Array): void {
    let state = this.states.get(name);
    if (!state) {
      state = { m: new Float64Array(values.length), v: new Float64Array(values.length) };
      this.states.set(name, state);
    }
    const correction1 = 1 - Math.pow(this.beta1, this.t);
    const correction2 = 1 - Math.pow(this.beta2, this.t);
    for (let i = 0; i < values.length; i++) {
      const g = grads[i];
      state.m[i] = this.beta1 * state.m[i] + (1 - this.beta1) * g;
      state.v[i] = this.beta2 * state.v[i] + (1 - this.beta2) * g * g;
      const mHat = state.m[i] / correction1;
      const vHat = state.v[i] / correction2;
      values[i] -= (this.lr * mHat) / (Math.sqrt(vHat) + this.eps);
    }
  }
}

function applyAdam(adam: Adam, params: Params, grads: Grads): void {
  adam.beginStep();
  adam.update("emb", params.emb.data, grads.emb.data);
  adam.update("wq", params.wq.data, grads.wq.data);
  adam.update("wk", params.wk.data, grads.wk.data);
  adam.update("wv", params.wv.data, grads.wv.data);
  adam.update("wo", params.wo.data, grads.wo.data);
  adam.update("w1", params.w1.data, grads.w1.data);
  adam.update("b1", params.b1, grads.b1);
  adam.update("w2", params.w2.data, grads.w2.data);
  adam.update("b2", params.b2, grads.b2);
  adam.update("u", params.u, grads.u);
  const cHolder = Float64Array.of(params.c);
  adam.update("c", cHolder, Float64Array.of(grads.c));
  params.c = cHolder[0];
}

function resetGrads(grads: Grads): void {
  grads.emb.data.fill(0);
  grads.wq.data.fill(0);
  grads.wk.data.fill(0);
  grads.wv.data.fill(0);
  grads.wo.data.fill(0);
  grads.w1.data.fill(0);
  grads.b1.fill(0);
  grads.w2.data.fill(0);
  grads.b2.fill(0);
  grads.u.fill(0);
  grads.c = 0;
}

export function accuracyOn(params: Params, positions: Mat, examples: Example[]): number {
  let hits = 0;
  for (const example of examples) {
    const predicted = predictProb(params, positions, example.tokens) >= 0.5 ? 1 : 0;
    if (predicted === example.label) hits++;
  }
  return hits / examples.length;
}

function resolveModel(job: AdapterJob): { config: ModelConfig; params: Params | null } {
  const preset = PRESETS[job.model];
  if (preset) {
    return { config: { ...preset, maxSeqLength: job.max_seq_length }, params: null };
  }
  // anything that is not a preset name is a path to saved weights
  const weightsPath = path.join(job.model, "weights.json");
  if (!fs.existsSync(weightsPath)) {
    throw new JobError(
      "missing_weights",
      `model ${job.model} is neither a preset (${Object.keys(PRESETS).join(", ")}) nor a directory containing weights.json`,
    );
  }
  const saved = deserialize(JSON.parse(fs.readFileSync(weightsPath, "utf-8")));
  return { config: saved.config, params: saved.params };
}

export function runFinetune(job: AdapterJob): TrainResult {
  const resolved = resolveModel(job);
  const config = resolved.config;
  const corpus = readCorpusText(job.corpus_jsonl);
  const rng = new Rng(job.seed);

  const trainAll = buildExamples(job.train_csv, corpus, config.vocabSize, config.maxSeqLength);
  const valAll = buildExamples(job.val_csv, corpus, config.vocabSize, config.maxSeqLength);
  const testAll = buildExamples(job.test_csv, corpus, config.vocabSize, config.maxSeqLength);

  const train = capExamples(trainAll, job.max_train_samples, rng);
  const val = capExamples(valAll, job.max_eval_samples, rng);
  const test = capExamples(testAll, job.max_eval_samples, rng);
  requireBothClasses(train, "train");
  if (val.length === 0 || test.length === 0) {
    throw new DataError("empty_dataset", "validation/test splits must be non-empty");
  }

  const params = resolved.params ?? initParams(config, rng);
  const positions = positionTable(config.maxSeqLength, config.dim);
  const grads = zeroGrads(config);
  const adam = new Adam(job.learning_rate);
  const log: TrainResult["log"] = [];

  let step = 0;
  let sinceEval = 0;
  let runningLoss = 0;
  let runningCount = 0;
  for (let epoch = 0; epoch < job.epochs; epoch++) {
    const order = rng.shuffle([...train.keys()]);
    let accumulated = 0;
    let microBatches = 0;
    resetGrads(grads);
    for (let start = 0; start < order.length; start += job.batch_size) {
      const batch = order.slice(start, start + job.batch_size);
      for (const index of batch) {
        const example = train[index];
        const { loss } = forwardBackward(
          params,
          positions,
          example.tokens,
          example.label,
          grads,
          1 / batch.length,
        );
        runningLoss += loss;
        runningCount += 1;
      }
      accumulated += 1;
      microBatches += 1;
      if (accumulated === job.gradient_accumulation_steps || start + job.batch_size >= order.length) {
        // average accumulated micro-batch gradients before the step
        if (microBatches > 1) {
          const inv = 1 / microBatches;
          for (const matGrad of [grads.emb, grads.wq, grads.wk, grads.wv, grads.wo, grads.w1, grads.w2]) {
            for (let i = 0; i < matGrad.data.length; i++) matGrad.data[i] *= inv;
          }
          for (const vec of [grads.b1, grads.b2, grads.u]) {
            for (let i = 0; i < vec.length; i++) vec[i] *= inv;
          }
          grads.c *= inv;
        }
        applyAdam(adam, params, grads);
        resetGrads(grads);
        step += 1;
        sinceEval += 1;
        accumulated = 0;
        microBatches = 0;
        if (sinceEval >= job.eval_steps) {
          sinceEval = 0;
          log.push({
            step,
            trainLoss: runningLoss / Math.max(runningCount, 1),
            valAccuracy: accuracyOn(params, positions, val),
          });
          runningLoss = 0;
          runningCount = 0;
        }
      }
    }
  }
  // always record a final point
  log.push({
    step,
    trainLoss: runningCount ? runningLoss / runningCount : NaN,
    valAccuracy: accuracyOn(params, positions, val),
  });

  const pairs: Array<[0 | 1, 0 | 1]> = test.map((example) => [
    predictProb(params, positions, example.tokens) >= 0.5 ? 1 : 0,
    example.label,
  ]);
  const doc = metricsDoc(confusion(pairs), "adapter/test");
  doc.split_counts = {
    train: labelCounts(train),
    validation: labelCounts(val),
    test: labelCounts(test),
  };

  fs.mkdirSync(job.output_dir, { recursive: true });
  const metricsPath = path.join(job.output_dir, "metrics.json");
  fs.writeFileSync(metricsPath, JSON.stringify(doc, null, 2) + "\n", "utf-8");

  const modelDir = path.join(job.output_dir, "model");
  fs.mkdirSync(modelDir, { recursive: true });
  fs.writeFileSync(
    path.join(modelDir, "weights.json"),
    JSON.stringify(serialize(config, params)) + "\n",
    "utf-8",
  );

  const logPath = path.join(job.output_dir, "train_log.csv");
  const lines = ["step,train_loss,val_accuracy"];
  for (const entry of log) {
    lines.push(`${entry.step},${entry.trainLoss},${entry.valAccuracy}`);
  }
  fs.writeFileSync(logPath, lines.join("\n") + "\n", "utf-8");

  return { metrics: doc, metricsPath, modelDir, log };
}
