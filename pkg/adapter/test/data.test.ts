import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, describe, expect, it } from "vitest";
import {
  capExamples,
  DataError,
  encodeText,
  labelCounts,
  readCorpusText,
  readDatasetCsv,
  requireBothClasses,
} from "../src/data.js";
import { confusion, majorityBaseline, metricsDoc } from "../src/metrics.js";
import { Rng } from "../src/rng.js";

const tmpDirs: string[] = [];

function tmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "adapter-test-"));
  tmpDirs.push(dir);
  return dir;
}

afterEach(() => {
  while (tmpDirs.length) fs.rmSync(tmpDirs.pop()!, { recursive: true, force: true });
});

describe("dataset csv", () => {
  it("reads ids and labels", () => {
    const dir = tmpDir();
    const file = path.join(dir, "d.csv");
    fs.writeFileSync(
      file,
      'publication_id,label,provenance,confidence,split\np1,AI,arxiv_rule,,train\n"p,2",NonAI,arxiv_rule,,train\n',
    );
    const rows = readDatasetCsv(file);
    expect(rows).toEqual([
      { id: "p1", label: 1 },
      { id: "p,2", label: 0 },
    ]);
  });

  it("rejects empty and malformed files", () => {
    const dir = tmpDir();
    const empty = path.join(dir, "empty.csv");
    fs.writeFileSync(empty, "");
    expect(() => readDatasetCsv(empty)).toThrow(DataError);
    const headerOnly = path.join(dir, "h.csv");
    fs.writeFileSync(headerOnly, "publication_id,label,provenance,confidence,split\n");
    expect(() => readDatasetCsv(headerOnly)).toThrow(/no rows/);
    const badLabel = path.join(dir, "b.csv");
    fs.writeFileSync(badLabel, "publication_id,label,provenance,confidence,split\np1,Maybe,x,,\n");
    expect(() => readDatasetCsv(badLabel)).toThrow(/unknown label/);
  });
});

describe("corpus and encoding", () => {
  it("joins text by id and encodes deterministically", () => {
    const dir = tmpDir();
    const corpusPath = path.join(dir, "corpus.jsonl");
    fs.writeFileSync(
      corpusPath,
      '{"id": "p1", "title": "Deep Models", "abstract": "of text."}\n',
    );
    const corpus = readCorpusText(corpusPath);
    expect(corpus.get("p1")!.title).toBe("Deep Models");
    const a = encodeText("Deep Models", "of text.", 2048, 512);
    const b = encodeText("Deep Models", "of text.", 2048, 512);
    expect(a).toEqual(b);
    expect(a.length).toBe(4);
    expect(a.every((t) => t >= 1 && t < 2048)).toBe(true);
  });

  it("caps sequence length and never returns empty", () => {
    const long = Array.from({ length: 600 }, (_, i) => `w${i}`).join(" ");
    expect(encodeText(long, "", 2048, 512).length).toBe(512);
    expect(encodeText("", "", 2048, 512)).toEqual([0]);
  });

  it("caps example counts deterministically", () => {
    const examples = Array.from({ length: 50 }, (_, i) => ({
      id: `p${i}`,
      label: (i % 2) as 0 | 1,
      tokens: [1],
    }));
    const a = capExamples(examples, 10, new Rng(3)).map((e) => e.id);
    const b = capExamples(examples, 10, new Rng(3)).map((e) => e.id);
    expect(a).toEqual(b);
    expect(a.length).toBe(10);
  });

  it("requires both classes", () => {
    const ones = [{ id: "a", label: 1 as const, tokens: [1] }];
    expect(() => requireBothClasses(ones, "train")).toThrow(/both classes/);
  });
});

describe("metrics", () => {
  it("computes the shared-schema document", () => {
    const counts = confusion([
      [1, 1],
      [1, 0],
      [0, 1],
      [0, 0],
      [1, 1],
    ]);
    expect(counts).toEqual({ tp: 2, fp: 1, fn: 1, tn: 1 });
    const doc = metricsDoc(counts, "adapter/test");
    expect(doc.accuracy).toBeCloseTo(0.6, 10);
    expect(doc.precision).toBeCloseTo(2 / 3, 3);
    expect(doc.recall).toBeCloseTo(2 / 3, 3);
    expect(doc.f1).toBeCloseTo(2 / 3, 3);
  });

  it("emits null for undefined ratios", () => {
    const doc = metricsDoc({ tp: 0, fp: 0, fn: 2, tn: 3 }, null);
    expect(doc.precision).toBeNull();
    expect(doc.recall).toBe(0);
    expect(doc.f1).toBeNull();
  });

  it("majority baseline", () => {
    expect(majorityBaseline([1, 1, 1, 0])).toBe(0.75);
    expect(majorityBaseline([0, 1])).toBe(0.5);
    expect(labelCounts([{ id: "a", label: 1, tokens: [1] }])).toEqual({ total: 1, AI: 1, NonAI: 0 });
  });
});
