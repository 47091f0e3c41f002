/**
 * Confusion metrics in the shared report schema (AI positive class,
 * undefined ratios emitted as null). Shape documented in
 * ../../schemas/metrics_report.schema.json.
 */

export interface Counts {
  tp: number;
  fp: number;
  fn: number;
  tn: number;
}

export interface MetricsDoc {
  slice: string | null;
  counts: Counts;
  accuracy: number | null;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  split_counts?: Record<string, { total: number; AI: number; NonAI: number }>;
}

export function confusion(pairs: Array<[predicted: 0 | 1, gold: 0 | 1]>): Counts {
  const counts: Counts = { tp: 0, fp: 0, fn: 0, tn: 0 };
  for (const [predicted, gold] of pairs) {
    if (predicted === 1 && gold === 1) counts.tp++;
    else if (predicted === 1) counts.fp++;
    else if (gold === 1) counts.fn++;
    else counts.tn++;
  }
  return counts;
}

const round4 = (x: number | null): number | null => (x === null ? null : Math.round(x * 10000) / 10000);

export function metricsDoc(counts: Counts, slice: string | null): MetricsDoc {
  const total = counts.tp + counts.fp + counts.fn + counts.tn;
  if (total === 0) throw new Error("metrics need at least one evaluated pair");
  const accuracy = (counts.tp + counts.tn) / total;
  const precision = counts.tp + counts.fp > 0 ? counts.tp / (counts.tp + counts.fp) : null;
  const recall = counts.tp + counts.fn > 0 ? counts.tp / (counts.tp + counts.fn) : null;
  let f1: number | null = null;
  if (precision !== null && recall !== null) {
    f1 = precision + recall === 0 ? 0 : (2 * precision * recall) / (precision + recall);
  }
  return {
    slice,
    counts,
    accuracy: round4(accuracy),
    precision: round4(precision),
    recall: round4(recall),
    f1: round4(f1),
  };
}

export function majorityBaseline(golds: Array<0 | 1>): number {
  const positives = golds.filter((g) => g === 1).length;
  return Math.max(positives, golds.length - positives) / golds.length;
}
