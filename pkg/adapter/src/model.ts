/**
 * Compact transformer encoder for binary sequence classification.
 *
 * One single-head self-attention block with residual, one ReLU feed-forward
 * block with residual, mean pooling, and a sigmoid head. Forward and backward
 * passes are written out explicitly; the test suite checks every parameter
 * gradient against central finite differences.
 */

import { Mat, matmul, matmulT, matmulTN, softmaxRows, zeros } from "./tensor.js";
import { Rng } from "./rng.js";

export interface ModelConfig {
  vocabSize: number;
  dim: number;
  ffnDim: number;
  maxSeqLength: number;
}

export interface Params {
  emb: Mat; // [V, d]
  wq: Mat; // [d, d]
  wk: Mat;
  wv: Mat;
  wo: Mat;
  w1: Mat; // [d, m]
  b1: Float64Array; // [m]
  w2: Mat; // [m, d]
  b2: Float64Array; // [d]
  u: Float64Array; // [d]
  c: number;
}

export interface Grads extends Omit<Params, "c"> {
  c: number;
}

export const PRESETS: Record<string, Omit<ModelConfig, "maxSeqLength">> = {
  mini: { vocabSize: 2048, dim: 32, ffnDim: 64 },
  "mini-wide": { vocabSize: 4096, dim: 64, ffnDim: 128 },
};

export function initParams(config: ModelConfig, rng: Rng): Params {
  const scaled = (rows: number, cols: number, scale: number): Mat => {
    const m = zeros(rows, cols);
    for (let i = 0; i < m.data.length; i++) m.data[i] = rng.normal(scale);
    return m;
  };
  const { vocabSize: v, dim: d, ffnDim: m } = config;
  return {
    emb: scaled(v, d, 0.1),
    wq: scaled(d, d, 1 / Math.sqrt(d)),
    wk: scaled(d, d, 1 / Math.sqrt(d)),
    wv: scaled(d, d, 1 / Math.sqrt(d)),
    wo: scaled(d, d, 1 / Math.sqrt(d)),
    w1: scaled(d, m, 1 / Math.sqrt(d)),
    b1: new Float64Array(m),
    w2: scaled(m, d, 1 / Math.sqrt(m)),
    b2: new Float64Array(d),
    u: Float64Array.from({ length: d }, () => rng.normal(0.1)),
    c: 0,
  };
}

export function zeroGrads(config: ModelConfig): Grads {
  const { vocabSize: v, dim: d, ffnDim: m } = config;
  return {
    emb: zeros(v, d),
    wq: zeros(d, d),
    wk: zeros(d, d),
    wv: zeros(d, d),
    wo: zeros(d, d),
    w1: zeros(d, m),
    b1: new Float64Array(m),
    w2: zeros(m, d),
    b2: new Float64Array(d),
    u: new Float64Array(d),
    c: 0,
  };
}

/** Fixed sinusoidal position table; not trained. */
export function positionTable(maxLen: number, dim: number): Mat {
  const table = zeros(maxLen, dim);
  for (let pos = 0; pos < maxLen; pos++) {
    for (let i = 0; i < dim; i++) {
      const angle = pos / Math.pow(10000, (2 * Math.floor(i / 2)) / dim);
      table.data[pos * dim + i] = i % 2 === 0 ? Math.sin(angle) : Math.cos(angle);
    }
  }
  return table;
}

function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

export interface ForwardResult {
  prob: number;
  loss: number;
}

/**
 * Forward pass; when grads is given, accumulates dLoss/dParam into it
 * (averaged by `scale`, typically 1/batchSize).
 */
export function forwardBackward(
  params: Params,
  positions: Mat,
  tokens: number[],
  label: 0 | 1,
  grads: Grads | null,
  scale = 1,
): ForwardResult {
  const d = params.wq.rows;
  const T = tokens.length;
  if (T === 0) throw new Error("empty token sequence");

  // X = emb[tokens] + positions
  const X = zeros(T, d);
  for (let t = 0; t < T; t++) {
    const embRow = tokens[t] * d;
    const posRow = t * d;
    for (let j = 0; j < d; j++) {
      X.data[t * d + j] = params.emb.data[embRow + j] + positions.data[posRow + j];
    }
  }

  // single-head attention
  const Q = matmul(X, params.wq);
  const K = matmul(X, params.wk);
  const V = matmul(X, params.wv);
  const invSqrtD = 1 / Math.sqrt(d);
  const A = matmulT(Q, K); // scores [T, T]
  for (let i = 0; i < A.data.length; i++) A.data[i] *= invSqrtD;
  softmaxRows(A);
  const C = matmul(A, V);
  const O = matmul(C, params.wo);

  // residual + feed-forward + residual
  const H = zeros(T, d);
  for (let i = 0; i < H.data.length; i++) H.data[i] = X.data[i] + O.data[i];
  const m = params.w1.cols;
  const F1 = matmul(H, params.w1); // pre-activation [T, m]
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < m; j++) F1.data[t * m + j] += params.b1[j];
  }
  const R = zeros(T, m);
  for (let i = 0; i < R.data.length; i++) R.data[i] = Math.max(0, F1.data[i]);
  const F2 = matmul(R, params.w2);
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < d; j++) F2.data[t * d + j] += params.b2[j];
  }
  const Z = zeros(T, d);
  for (let i = 0; i < Z.data.length; i++) Z.data[i] = H.data[i] + F2.data[i];

  // mean pool + sigmoid head
  const pool = new Float64Array(d);
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < d; j++) pool[j] += Z.data[t * d + j] / T;
  }
  let logit = params.c;
  for (let j = 0; j < d; j++) logit += pool[j] * params.u[j];
  const prob = sigmoid(logit);
  const sign = label === 1 ? 1 : -1;
  // log(1 + exp(-sign * logit)), stable
  const margin = -sign * logit;
  const loss = margin > 30 ? margin : Math.log1p(Math.exp(margin));

  if (!grads) return { prob, loss };

  // --- backward ---
  const dLogit = (prob - label) * scale;
  grads.c += dLogit;
  for (let j = 0; j < d; j++) grads.u[j] += pool[j] * dLogit;

  const dZ = zeros(T, d);
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < d; j++) dZ.data[t * d + j] = (params.u[j] * dLogit) / T;
  }

  // Z = H + F2: dH gets dZ directly plus the FFN path below
  const dF2 = dZ; // alias: same values
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < d; j++) grads.b2[j] += dF2.data[t * d + j];
  }
  const dR = matmulT(dF2, params.w2); // [T, m] = dF2 @ w2^T
  addGrad(grads.w2, matmulTN(R, dF2)); // [m, d] = R^T @ dF2
  const dF1 = dR;
  for (let i = 0; i < dF1.data.length; i++) {
    if (F1.data[i] <= 0) dF1.data[i] = 0;
  }
  for (let t = 0; t < T; t++) {
    for (let j = 0; j < m; j++) grads.b1[j] += dF1.data[t * m + j];
  }
  addGrad(grads.w1, matmulTN(H, dF1)); // [d, m]
  const dH = matmulT(dF1, params.w1); // [T, d] = dF1 @ w1^T
  for (let i = 0; i < dH.data.length; i++) dH.data[i] += dZ.data[i]; // residual branch

  // H = X + O
  const dX = zeros(T, d);
  for (let i = 0; i < dX.data.length; i++) dX.data[i] = dH.data[i];
  const dO = dH;

  const dC = matmulT(dO, params.wo); // [T, d]
  addGrad(grads.wo, matmulTN(C, dO));
  const dA = matmulT(dC, V); // [T, T]
  const dV = matmulTN(A, dC); // [T, d]

  // softmax rows backward into scaled scores
  const dS = zeros(T, T);
  for (let t = 0; t < T; t++) {
    let dot = 0;
    for (let v2 = 0; v2 < T; v2++) dot += dA.data[t * T + v2] * A.data[t * T + v2];
    for (let v2 = 0; v2 < T; v2++) {
      dS.data[t * T + v2] = A.data[t * T + v2] * (dA.data[t * T + v2] - dot);
    }
  }
  for (let i = 0; i < dS.data.length; i++) dS.data[i] *= invSqrtD;

  const dQ = matmul(dS, K); // [T, d]
  const dK = matmulTN(dS, Q); // dK = dS^T @ Q
  addGrad(grads.wq, matmulTN(X, dQ));
  addGrad(grads.wk, matmulTN(X, dK));
  addGrad(grads.wv, matmulTN(X, dV));
  const dXq = matmulT(dQ, params.wq);
  const dXk = matmulT(dK, params.wk);
  const dXv = matmulT(dV, params.wv);
  for (let i = 0; i < dX.data.length; i++) {
    dX.data[i] += dXq.data[i] + dXk.data[i] + dXv.data[i];
  }

  for (let t = 0; t < T; t++) {
    const embRow = tokens[t] * d;
    for (let j = 0; j < d; j++) grads.emb.data[embRow + j] += dX.data[t * d + j];
  }

  return { prob, loss };
}

function addGrad(target: Mat, delta: Mat): void {
  for (let i = 0; i < target.data.length; i++) target.data[i] += delta.data[i];
}

export function predictProb(params: Params, positions: Mat, tokens: number[]): number {
  return forwardBackward(params, positions, tokens, 0, null).prob;
}

// --- (de)serialization -----------------------------------------------------

export interface SavedModel {
  format: string;
  version: number;
  config: ModelConfig;
  params: {
    emb: number[];
    wq: number[];
    wk: number[];
    wv: number[];
    wo: number[];
    w1: number[];
    b1: number[];
    w2: number[];
    b2: number[];
    u: number[];
    c: number;
  };
}

export const MODEL_FORMAT = "annobench-adapter-model";
export const MODEL_VERSION = 1;

export function serialize(config: ModelConfig, params: Params): SavedModel {
  return {
    format: MODEL_FORMAT,
    version: MODEL_VERSION,
    config,
    params: {
      emb: Array.from(params.emb.data),
      wq: Array.from(params.wq.data),
      wk: Array.from(params.wk.data),
      wv: Array.from(params.wv.data),
      wo: Array.from(params.wo.data),
      w1: Array.from(params.w1.data),
      b1: Array.from(params.b1),
      w2: Array.from(params.w2.data),
      b2: Array.from(params.b2),
      u: Array.from(params.u),
      c: params.c,
    },
  };
}

export function deserialize(saved: SavedModel): { config: ModelConfig; params: Params } {
  if (saved.format !== MODEL_FORMAT) throw new Error(`not a ${MODEL_FORMAT} document`);
  const { vocabSize: v, dim: d, ffnDim: m } = saved.config;
  const p = saved.params;
  const mat = (rows: number, cols: number, values: number[]): Mat => ({
    rows,
    cols,
    data: Float64Array.from(values),
  });
  return {
    config: saved.config,
    params: {
      emb: mat(v, d, p.emb),
      wq: mat(d, d, p.wq),
      wk: mat(d, d, p.wk),
      wv: mat(d, d, p.wv),
      wo: mat(d, d, p.wo),
      w1: mat(d, m, p.w1),
      b1: Float64Array.from(p.b1),
      w2: mat(m, d, p.w2),
      b2: Float64Array.from(p.b2),
      u: Float64Array.from(p.u),
      c: p.c,
    },
  };
}
