import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { generateEncoder, readEncoder, writeEncoder } from "../src/checkpoint.js";
import { clsVector, encode, meanVector } from "../src/encoder.js";
import { main } from "../src/cli.js";
import { loadManifest, parseCsv } from "../src/manifest.js";
import { readEmbeddingFile } from "../src/mmeb.js";
import { preprocessText } from "../src/preprocess.js";
import { CLS_ID, MAX_SEQUENCE_LENGTH, PAD_ID, Vocabulary, tokenize } from "../src/tokenizer.js";

const PRIMARY_VOCAB = join(__dirname, "..", "..", "src", "mmhate", "data", "vocab.txt");

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "exporter-"));
}

function writeManifest(path: string, rows: Array<[string, string]>): void {
  const lines = ["id,audio_path,transcript,label,split"];
  for (const [id, transcript] of rows) {
    lines.push(`${id},audio/${id}.wav,"${transcript.replace(/"/g, '""')}",0,train`);
  }
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

describe("preprocess parity with the main pipeline", () => {
  it("strips handles, urls, and special characters", () => {
    expect(preprocessText("@user check https://x.co NOW!!")).toBe("check now!!");
    expect(preprocessText("is this #hate? yes...")).toBe("is this hate? yes");
    expect(preprocessText("plain words")).toBe("plain words");
  });

  it("is idempotent", () => {
    const samples = ["@a@b c", "x  y\tz", "WWW.site.com ok!", "", "!!!???"];
    for (const raw of samples) {
      const once = preprocessText(raw);
      expect(preprocessText(once)).toBe(once);
    }
  });
});

describe("tokenizer contract", () => {
  let vocab: Vocabulary;
  beforeAll(() => {
    const tokens = readFileSync(PRIMARY_VOCAB, "utf-8").split("\n").filter((l) => l.trim());
    vocab = new Vocabulary(tokens);
  });

  it("always emits CLS-first fixed-length sequences", () => {
    for (const text of ["", "the weather was calm", "now!!", "zzzzqqqq unknown"]) {
      const seq = tokenize(preprocessText(text), vocab);
      expect(seq.ids.length).toBe(MAX_SEQUENCE_LENGTH);
      expect(seq.ids[0]).toBe(CLS_ID);
      for (let i = seq.attentionLength; i < MAX_SEQUENCE_LENGTH; i++) {
        expect(seq.ids[i]).toBe(PAD_ID);
      }
    }
  });

  it("truncates long inputs to 128 ids", () => {
    const seq = tokenize(Array(300).fill("the").join(" "), vocab);
    expect(seq.attentionLength).toBe(MAX_SEQUENCE_LENGTH);
  });
});

describe("encoder", () => {
  it("checkpoint round-trips through the binary format", () => {
    const encoder = generateEncoder(["[PAD]", "[CLS]", "[UNK]", "a", "b"], 3, {
      hidden: 32,
      layers: 1,
      heads: 2,
      ffn: 16,
      maxLen: 8,
    });
    const dir = tempDir();
    const path = join(dir, "enc.mmec");
    writeEncoder(path, encoder);
    const loaded = readEncoder(path);
    expect(loaded.config).toEqual(encoder.config);
    expect(Array.from(loaded.weights.tokenEmb)).toEqual(Array.from(encoder.weights.tokenEmb));
    expect(Array.from(loaded.weights.layers[0].w2)).toEqual(Array.from(encoder.weights.layers[0].w2));
  });

  it("cls depends on the whole sequence and differs from mean pooling", () => {
    const tokens = readFileSync(PRIMARY_VOCAB, "utf-8").split("\n").filter((l) => l.trim());
    const vocab = new Vocabulary(tokens);
    const encoder = generateEncoder(tokens, 11, { layers: 1, ffn: 256 });
    const seqA = tokenize("the weather was calm", vocab);
    const seqB = tokenize("the weather was bright", vocab);
    const statesA = encode(encoder, seqA);
    const statesB = encode(encoder, seqB);
    const clsA = clsVector(statesA, 768);
    const clsB = clsVector(statesB, 768);
    let maxDiff = 0;
    for (let i = 0; i < 768; i++) maxDiff = Math.max(maxDiff, Math.abs(clsA[i] - clsB[i]));
    expect(maxDiff).toBeGreaterThan(1e-6); // attention mixes the changed token into [CLS]

    const meanA = meanVector(statesA, seqA.attentionLength, 768);
    let clsVsMean = 0;
    for (let i = 0; i < 768; i++) clsVsMean = Math.max(clsVsMean, Math.abs(clsA[i] - meanA[i]));
    expect(clsVsMean).toBeGreaterThan(1e-6);
  });
});

describe("manifest parsing", () => {
  it("handles quoted commas", () => {
    const rows = parseCsv('id,transcript\na,"hello, there"\n');
    expect(rows[1]).toEqual(["a", "hello, there"]);
  });

  it("reports missing transcripts by id", () => {
    const dir = tempDir();
    const path = join(dir, "m.csv");
    writeFileSync(path, "id,audio_path,transcript,label,split\nx,a.wav,,0,train\n", "utf-8");
    expect(() => loadManifest(path)).toThrow(/x/);
  });
});

describe("export command conformance", () => {
  let dir: string;
  let encoderPath: string;
  let manifestPath: string;

  beforeAll(() => {
    dir = tempDir();
    encoderPath = join(dir, "encoder.mmec");
    expect(
      main(["gen-encoder", "--vocab", PRIMARY_VOCAB, "--out", encoderPath, "--seed", "5", "--layers", "1", "--ffn", "768"]),
    ).toBe(0);
    manifestPath = join(dir, "manifest.csv");
    writeManifest(manifestPath, [
      ["clip_a", "the weather was calm and bright"],
      ["clip_b", "every single zorbling is a liar!"],
      ["clip_c", "she plays the piano, every evening"],
    ]);
  });

  it("writes a valid 768-dim embedding file per manifest id", () => {
    const out = join(dir, "cls.mmeb");
    expect(main(["export", "--manifest", manifestPath, "--mode", "cls", "--out", out, "--model", encoderPath])).toBe(0);
    const records = readEmbeddingFile(out, 768);
    expect([...records.keys()]).toEqual(["clip_a", "clip_b", "clip_c"]);
    for (const values of records.values()) {
      expect(values.length).toBe(768);
      for (const v of values) expect(Number.isFinite(v)).toBe(true);
    }
    const blob = readFileSync(out);
    expect(blob.toString("ascii", 0, 4)).toBe("MMEB");
    expect(blob.readUInt32LE(4)).toBe(1);
    expect(blob.readUInt32LE(8)).toBe(3);
    expect(blob.readUInt32LE(12)).toBe(768);
  });

  it("cls and mean vectors differ on multi-token inputs", () => {
    const clsOut = join(dir, "d_cls.mmeb");
    const meanOut = join(dir, "d_mean.mmeb");
    expect(main(["export", "--manifest", manifestPath, "--mode", "cls", "--out", clsOut, "--model", encoderPath])).toBe(0);
    expect(main(["export", "--manifest", manifestPath, "--mode", "mean", "--out", meanOut, "--model", encoderPath])).toBe(0);
    const cls = readEmbeddingFile(clsOut, 768);
    const mean = readEmbeddingFile(meanOut, 768);
    for (const id of cls.keys()) {
      const a = cls.get(id)!;
      const b = mean.get(id)!;
      let maxDiff = 0;
      for (let i = 0; i < 768; i++) maxDiff = Math.max(maxDiff, Math.abs(a[i] - b[i]));
      expect(maxDiff).toBeGreaterThan(1e-6);
    }
  });

  it("repeated export agrees within 1e-5", () => {
    const first = join(dir, "rep1.mmeb");
    const second = join(dir, "rep2.mmeb");
    expect(main(["export", "--manifest", manifestPath, "--mode", "mean", "--out", first, "--model", encoderPath])).toBe(0);
    expect(main(["export", "--manifest", manifestPath, "--mode", "mean", "--out", second, "--model", encoderPath])).toBe(0);
    const a = readEmbeddingFile(first);
    const b = readEmbeddingFile(second);
    for (const id of a.keys()) {
      const va = a.get(id)!;
      const vb = b.get(id)!;
      for (let i = 0; i < va.length; i++) expect(Math.abs(va[i] - vb[i])).toBeLessThanOrEqual(1e-5);
    }
  });

  it("mean-mode vector equals the mean of the per-token debug dump", () => {
    const out = join(dir, "mean_dump.mmeb");
    const dump = join(dir, "tokens.mmeb");
    expect(
      main([
        "export", "--manifest", manifestPath, "--mode", "mean", "--out", out,
        "--model", encoderPath, "--debug-tokens", dump,
      ]),
    ).toBe(0);
    const means = readEmbeddingFile(out, 768);
    const tokens = readEmbeddingFile(dump, 768);
    for (const [id, meanValues] of means) {
      const perToken: Float32Array[] = [];
      for (const [key, values] of tokens) {
        if (key.startsWith(`${id}#`)) perToken.push(values);
      }
      expect(perToken.length).toBeGreaterThan(1);
      for (let i = 0; i < 768; i++) {
        let acc = 0;
        for (const values of perToken) acc += values[i];
        expect(Math.abs(acc / perToken.length - meanValues[i])).toBeLessThanOrEqual(1e-5);
      }
    }
  });

  it("rejects encoders whose hidden size is not 768", () => {
    const smallPath = join(dir, "small.mmec");
    expect(
      main(["gen-encoder", "--vocab", PRIMARY_VOCAB, "--out", smallPath, "--hidden", "512", "--layers", "1", "--ffn", "64"]),
    ).toBe(0);
    const out = join(dir, "never.mmeb");
    expect(main(["export", "--manifest", manifestPath, "--mode", "cls", "--out", out, "--model", smallPath])).toBe(1);
  });

  it("requires a local model path", () => {
    const out = join(dir, "never2.mmeb");
    expect(main(["export", "--manifest", manifestPath, "--mode", "cls", "--out", out])).toBe(1);
    expect(main(["export", "--manifest", manifestPath, "--mode", "cls", "--out", out, "--model", join(dir, "ghost.mmec")])).toBe(1);
  });
});
