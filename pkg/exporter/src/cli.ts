#!/usr/bin/env node
/**
 * Embedding exporter CLI.
 *
 *   export      --manifest <csv> --mode cls|mean --out <mmeb>
 *               [--model <path>] [--batch-size <n>] [--debug-tokens <mmeb>]
 *   gen-encoder --vocab <txt> --out <mmec> [--seed <n>] [--layers <n>]
 *               [--heads <n>] [--ffn <n>] [--hidden <n>]
 *
 * Exit codes: 0 success, 1 validation error, 2 I/O error.
 */

import { existsSync, readFileSync } from "node:fs";
import process from "node:process";

import { generateEncoder, readEncoder, writeEncoder, type Encoder } from "./checkpoint.js";
import { clsVector, encode, meanVector } from "./encoder.js";
import { loadManifest } from "./manifest.js";
import { writeEmbeddingFile, type EmbeddingRecord } from "./mmeb.js";
import { preprocessText } from "./preprocess.js";
import { Vocabulary, tokenize } from "./tokenizer.js";

export const EXPORT_DIM = 768;

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--")) throw new ValidationError(`unexpected argument ${key}`);
    const value = argv[i + 1];
    if (value === undefined) throw new ValidationError(`flag ${key} needs a value`);
    flags.set(key.slice(2), value);
  }
  return flags;
}

class ValidationError extends Error {}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new ValidationError(`--${name} is required`);
  return value;
}

export function runExport(flags: Map<string, string>): void {
  const manifestPath = required(flags, "manifest");
  const mode = required(flags, "mode");
  const outPath = required(flags, "out");
  if (mode !== "cls" && mode !== "mean") throw new ValidationError(`--mode must be cls or mean, got ${mode}`);
  const modelPath = flags.get("model") ?? "";
  if (!modelPath) {
    throw new ValidationError(
      "--model must point to a local encoder checkpoint (no model hub is reachable from this tool); " +
        "use `gen-encoder` to create a deterministic test encoder",
    );
  }
  if (!existsSync(modelPath)) {
    throw new ValidationError(`encoder ${modelPath} is not available locally`);
  }
  const encoder: Encoder = readEncoder(modelPath);
  if (encoder.config.hidden !== EXPORT_DIM) {
    throw new ValidationError(`encoder hidden size ${encoder.config.hidden} != ${EXPORT_DIM}`);
  }
  const batchSize = Number(flags.get("batch-size") ?? "16");
  if (!Number.isInteger(batchSize) || batchSize < 1) throw new ValidationError("--batch-size must be a positive integer");

  const vocab = new Vocabulary(encoder.config.vocab);
  const rows = loadManifest(manifestPath);
  const records: EmbeddingRecord[] = [];
  const debugRecords: EmbeddingRecord[] = [];
  for (let start = 0; start < rows.length; start += batchSize) {
    for (const row of rows.slice(start, start + batchSize)) {
      const seq = tokenize(preprocessText(row.transcript), vocab);
      const states = encode(encoder, seq);
      const values =
        mode === "cls"
          ? clsVector(states, encoder.config.hidden)
          : meanVector(states, seq.attentionLength, encoder.config.hidden);
      records.push({ id: row.id, values });
      if (flags.has("debug-tokens")) {
        const hidden = encoder.config.hidden;
        for (let p = 0; p < seq.attentionLength; p++) {
          const tokenState = new Float32Array(hidden);
          tokenState.set(states.subarray(p * hidden, (p + 1) * hidden));
          debugRecords.push({ id: `${row.id}#${p}`, values: tokenState });
        }
      }
    }
  }
  writeEmbeddingFile(outPath, records);
  if (flags.has("debug-tokens")) {
    writeEmbeddingFile(flags.get("debug-tokens")!, debugRecords);
  }
  console.log(`wrote ${records.length} ${mode} embeddings of size ${EXPORT_DIM} -> ${outPath}`);
}

export function runGenEncoder(flags: Map<string, string>): void {
  const vocabPath = required(flags, "vocab");
  const outPath = required(flags, "out");
  const tokens = readFileSync(vocabPath, "utf-8")
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  const encoder = generateEncoder(tokens, Number(flags.get("seed") ?? "0"), {
    hidden: Number(flags.get("hidden") ?? "768"),
    layers: Number(flags.get("layers") ?? "2"),
    heads: Number(flags.get("heads") ?? "4"),
    ffn: Number(flags.get("ffn") ?? "1536"),
  });
  writeEncoder(outPath, encoder);
  console.log(
    `wrote encoder (hidden ${encoder.config.hidden}, ${encoder.config.layers} layers, vocab ${tokens.length}) -> ${outPath}`,
  );
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    if (command === "export") {
      runExport(parseFlags(rest));
    } else if (command === "gen-encoder") {
      runGenEncoder(parseFlags(rest));
    } else {
      throw new ValidationError(`unknown command ${command ?? "(none)"}; use export or gen-encoder`);
    }
    return 0;
  } catch (error) {
    if (error instanceof ValidationError) {
      console.error(`error: ${error.message}`);
      return 1;
    }
    if (error instanceof Error && "code" in error && typeof (error as NodeJS.ErrnoException).code === "string") {
      console.error(`i/o error: ${error.message}`);
      return 2;
    }
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
