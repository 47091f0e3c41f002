/** Dense row-major matrices and the handful of ops the model needs. */

export interface Mat {
  rows: number;
  cols: number;
  data: Float64Array;
}

export function zeros(rows: number, cols: number): Mat {
  return { rows, cols, data: new Float64Array(rows * cols) };
}

export function matFrom(rows: number, cols: number, values: number[]): Mat {
  if (values.length !== rows * cols) throw new Error("shape mismatch");
  return { rows, cols, data: Float64Array.from(values) };
}

export function get(m: Mat, r: number, c: number): number {
  return m.data[r * m.cols + c];
}

export function set(m: Mat, r: number, c: number, v: number): void {
  m.data[r * m.cols + c] = v;
}

/** out = a @ b  ([n,k] x [k,m] -> [n,m]) */
export function matmul(a: Mat, b: Mat): Mat {
  if (a.cols !== b.rows) throw new Error(`matmul ${a.rows}x${a.cols} @ ${b.rows}x${b.cols}`);
  const out = zeros(a.rows, b.cols);
  for (let i = 0; i < a.rows; i++) {
    for (let k = 0; k < a.cols; k++) {
      const aik = a.data[i * a.cols + k];
      if (aik === 0) continue;
      const bRow = k * b.cols;
      const oRow = i * b.cols;
      for (let j = 0; j < b.cols; j++) {
        out.data[oRow + j] += aik * b.data[bRow + j];
      }
    }
  }
  return out;
}

/** out = a @ b^T  ([n,k] x [m,k] -> [n,m]) */
export function matmulT(a: Mat, b: Mat): Mat {
  if (a.cols !== b.cols) throw new Error(`matmulT ${a.rows}x${a.cols} @ (${b.rows}x${b.cols})^T`);
  const out = zeros(a.rows, b.rows);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < b.rows; j++) {
      let acc = 0;
      const aRow = i * a.cols;
      const bRow = j * b.cols;
      for (let k = 0; k < a.cols; k++) acc += a.data[aRow + k] * b.data[bRow + k];
      out.data[i * b.rows + j] = acc;
    }
  }
  return out;
}

/** out = a^T @ b  ([n,k] x [n,m] -> [k,m]) */
export function matmulTN(a: Mat, b: Mat): Mat {
  if (a.rows !== b.rows) throw new Error(`matmulTN (${a.rows}x${a.cols})^T @ ${b.rows}x${b.cols}`);
  const out = zeros(a.cols, b.cols);
  for (let n = 0; n < a.rows; n++) {
    const aRow = n * a.cols;
    const bRow = n * b.cols;
    for (let k = 0; k < a.cols; k++) {
      const ank = a.data[aRow + k];
      if (ank === 0) continue;
      const oRow = k * b.cols;
      for (let m = 0; m < b.cols; m++) out.data[oRow + m] += ank * b.data[bRow + m];
    }
  }
  return out;
}

export function addInPlace(target: Mat, other: Mat, scale = 1): void {
  for (let i = 0; i < target.data.length; i++) target.data[i] += other.data[i] * scale;
}

export function clone(m: Mat): Mat {
  return { rows: m.rows, cols: m.cols, data: Float64Array.from(m.data) };
}

/** Row-wise softmax in place. */
export function softmaxRows(m: Mat): void {
  for (let r = 0; r < m.rows; r++) {
    const row = r * m.cols;
    let max = -Infinity;
    for (let c = 0; c < m.cols; c++) max = Math.max(max, m.data[row + c]);
    let sum = 0;
    for (let c = 0; c < m.cols; c++) {
      const e = Math.exp(m.data[row + c] - max);
      m.data[row + c] = e;
      sum += e;
    }
    for (let c = 0; c < m.cols; c++) m.data[row + c] /= sum;
  }
}
