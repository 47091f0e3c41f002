import { describe, expect, it } from "vitest";
import {
  forwardBackward,
  Grads,
  initParams,
  ModelConfig,
  Params,
  positionTable,
  serialize,
  deserialize,
  zeroGrads,
} from "../src/model.js";
import { Rng } from "../src/rng.js";

const CONFIG: ModelConfig = { vocabSize: 30, dim: 6, ffnDim: 8, maxSeqLength: 8 };

const BATCH: { tokens: number[]; label: 0 | 1 }[] = [
  { tokens: [1, 7, 3], label: 1 },
  { tokens: [2, 2, 9, 14], label: 0 },
  { tokens: [5], label: 1 },
];

function batchLoss(params: Params, grads: Grads | null): number {
  const positions = positionTable(CONFIG.maxSeqLength, CONFIG.dim);
  let total = 0;
  for (const example of BATCH) {
    total += forwardBackward(params, positions, example.tokens, example.label, grads, 1 / BATCH.length).loss;
  }
  return total / BATCH.length;
}

interface Slot {
  name: string;
  values: Float64Array;
  grads: Float64Array;
}

function slots(params: Params, grads: Grads): Slot[] {
  return [
    { name: "emb", values: params.emb.data, grads: grads.emb.data },
    { name: "wq", values: params.wq.data, grads: grads.wq.data },
    { name: "wk", values: params.wk.data, grads: grads.wk.data },
    { name: "wv", values: params.wv.data, grads: grads.wv.data },
    { name: "wo", values: params.wo.data, grads: grads.wo.data },
    { name: "w1", values: params.w1.data, grads: grads.w1.data },
    { name: "b1", values: params.b1, grads: grads.b1 },
    { name: "w2", values: params.w2.data, grads: grads.w2.data },
    { name: "b2", values: params.b2, grads: grads.b2 },
    { name: "u", values: params.u, grads: grads.u },
  ];
}

describe("forwardBackward", () => {
  it("analytic gradients match central finite differences", () => {
    const params = initParams(CONFIG, new Rng(123));
    const grads = zeroGrads(CONFIG);
    batchLoss(params, grads);

    const h = 1e-5;
    for (const slot of slots(params, grads)) {
      for (let i = 0; i < slot.values.length; i++) {
        const original = slot.values[i];
        slot.values[i] = original + h;
        const plus = batchLoss(params, null);
        slot.values[i] = original - h;
        const minus = batchLoss(params, null);
        slot.values[i] = original;
        const numeric = (plus - minus) / (2 * h);
        const analytic = slot.grads[i];
        const denom = Math.max(Math.abs(numeric), Math.abs(analytic), 1e-8);
        expect(
          Math.abs(numeric - analytic) / denom,
          `${slot.name}[${i}] numeric=${numeric} analytic=${analytic}`,
        ).toBeLessThan(1e-4);
      }
    }

    // bias scalar
    const original = params.c;
    params.c = original + h;
    const plus = batchLoss(params, null);
    params.c = original - h;
    const minus = batchLoss(params, null);
    params.c = original;
    const numeric = (plus - minus) / (2 * h);
    expect(Math.abs(numeric - grads.c) / Math.max(Math.abs(numeric), 1e-8)).toBeLessThan(1e-4);
  });

  it("probability stays in (0, 1) and loss is finite", () => {
    const params = initParams(CONFIG, new Rng(7));
    const positions = positionTable(CONFIG.maxSeqLength, CONFIG.dim);
    const rng = new Rng(11);
    for (let trial = 0; trial < 50; trial++) {
      const tokens = Array.from({ length: rng.int(CONFIG.maxSeqLength) + 1 }, () =>
        rng.int(CONFIG.vocabSize),
      );
      const { prob, loss } = forwardBackward(params, positions, tokens, rng.int(2) as 0 | 1, null);
      expect(prob).toBeGreaterThan(0);
      expect(prob).toBeLessThan(1);
      expect(Number.isFinite(loss)).toBe(true);
    }
  });

  it("rejects empty sequences", () => {
    const params = initParams(CONFIG, new Rng(1));
    const positions = positionTable(CONFIG.maxSeqLength, CONFIG.dim);
    expect(() => forwardBackward(params, positions, [], 1, null)).toThrow();
  });

  it("serialization round-trips", () => {
    const params = initParams(CONFIG, new Rng(5));
    const restored = deserialize(serialize(CONFIG, params));
    const positions = positionTable(CONFIG.maxSeqLength, CONFIG.dim);
    const tokens = [3, 9, 1];
    const before = forwardBackward(params, positions, tokens, 1, null).prob;
    const after = forwardBackward(restored.params, positions, tokens, 1, null).prob;
    expect(after).toBe(before);
  });
});
