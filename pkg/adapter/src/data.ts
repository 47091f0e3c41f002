/**
 * Dataset and corpus file readers shared with the core pipeline.
 *
 * Datasets are CSV files with columns publication_id,label,provenance,
 * confidence,split; the corpus is line-delimited JSON with one publication
 * per line. The adapter joins them by publication id to recover the text.
 */

import * as fs from "node:fs";
import { Rng } from "./rng.js";

export interface Example {
  id: string;
  label: 0 | 1; // 1 = AI
  tokens: number[];
}

export interface PublicationText {
  title: string;
  abstract: string;
}

export class DataError extends Error {
  constructor(
    public kind: string,
    message: string,
  ) {
    super(message);
  }
}

function splitCsvLine(line: string): string[] {
  // minimal CSV: handles quoted fields with embedded commas/quotes
  const fields: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        current += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  fields.push(current);
  return fields;
}

export function readDatasetCsv(path: string): { id: string; label: 0 | 1 }[] {
  if (!fs.existsSync(path)) throw new DataError("missing_dataset", `dataset file not found: ${path}`);
  const lines = fs.readFileSync(path, "utf-8").split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new DataError("empty_dataset", `dataset file is empty: ${path}`);
  const header = splitCsvLine(lines[0]);
  const idCol = header.indexOf("publication_id");
  const labelCol = header.indexOf("label");
  if (idCol < 0 || labelCol < 0) {
    throw new DataError("bad_schema", `${path}: expected publication_id and label columns, got ${header.join(",")}`);
  }
  const rows: { id: string; label: 0 | 1 }[] = [];
  for (const line of lines.slice(1)) {
    const fields = splitCsvLine(line);
    const label = fields[labelCol];
    if (label !== "AI" && label !== "NonAI") {
      throw new DataError("bad_label", `${path}: unknown label ${label}`);
    }
    rows.push({ id: fields[idCol], label: label === "AI" ? 1 : 0 });
  }
  if (rows.length === 0) throw new DataError("empty_dataset", `dataset has no rows: ${path}`);
  return rows;
}

export function readCorpusText(path: string): Map<string, PublicationText> {
  if (!fs.existsSync(path)) throw new DataError("missing_corpus", `corpus file not found: ${path}`);
  const texts = new Map<string, PublicationText>();
  for (const line of fs.readFileSync(path, "utf-8").split(/\r?\n/)) {
    if (!line.trim()) continue;
    const record = JSON.parse(line);
    texts.set(String(record.id), {
      title: String(record.title ?? ""),
      abstract: String(record.abstract ?? ""),
    });
  }
  return texts;
}

/** FNV-1a over the token, reserving index 0 for empty sequences. */
export function hashToken(token: string, vocabSize: number): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    h ^= token.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return (h % (vocabSize - 1)) + 1;
}

export function encodeText(
  title: string,
  abstract: string,
  vocabSize: number,
  maxSeqLength: number,
): number[] {
  const tokens = `${title} ${abstract}`
    .toLowerCase()
    .split(/[^a-z0-9]+/)
    .filter((t) => t.length > 0)
    .slice(0, maxSeqLength)
    .map((t) => hashToken(t, vocabSize));
  return tokens.length > 0 ? tokens : [0];
}

export function buildExamples(
  datasetPath: string,
  corpus: Map<string, PublicationText>,
  vocabSize: number,
  maxSeqLength: number,
): Example[] {
  const rows = readDatasetCsv(datasetPath);
  return rows.map((row) => {
    const text = corpus.get(row.id);
    if (!text) throw new DataError("missing_publication", `publication ${row.id} not in corpus`);
    return { id: row.id, label: row.label, tokens: encodeText(text.title, text.abstract, vocabSize, maxSeqLength) };
  });
}

/** Seeded shuffle followed by truncation, mirroring the core pipeline's caps. */
export function capExamples(examples: Example[], cap: number, rng: Rng): Example[] {
  const copy = [...examples];
  rng.shuffle(copy);
  return copy.slice(0, Math.min(cap, copy.length));
}

export function requireBothClasses(examples: Example[], name: string): void {
  const positives = examples.filter((e) => e.label === 1).length;
  if (positives === 0 || positives === examples.length) {
    throw new DataError("single_class", `${name} split must contain both classes (got ${positives}/${examples.length} positives)`);
  }
}

export function labelCounts(examples: Example[]): { total: number; AI: number; NonAI: number } {
  const ai = examples.filter((e) => e.label === 1).length;
  return { total: examples.length, AI: ai, NonAI: examples.length - ai };
}
