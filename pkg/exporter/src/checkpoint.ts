/**
 * Local encoder checkpoints: a binary container holding the model shape,
 * its vocabulary, and float32 weights in a fixed order.
 *
 * Layout: magic "MMEC", u32 version (1), u32 JSON header length, UTF-8 JSON
 * header {hidden, layers, heads, ffn, maxLen, vocab}, then little-endian
 * float32 blocks:
 *   tokenEmb [vocab x hidden], posEmb [maxLen x hidden],
 *   embLnGamma [hidden], embLnBeta [hidden],
 *   per layer: wq,bq, wk,bk, wv,bv, wo,bo  (each w is [hidden x hidden]),
 *              ln1Gamma, ln1Beta,
 *              w1 [ffn x hidden], b1 [ffn], w2 [hidden x ffn], b2 [hidden],
 *              ln2Gamma, ln2Beta
 * Weight matrices are row-major [out x in]; y = W x + b.
 */

import { readFileSync, renameSync, writeFileSync } from "node:fs";

export const MAGIC = "MMEC";
export const VERSION = 1;

export interface EncoderConfig {
  hidden: number;
  layers: number;
  heads: number;
  ffn: number;
  maxLen: number;
  vocab: string[];
}

export interface LayerWeights {
  wq: Float32Array;
  bq: Float32Array;
  wk: Float32Array;
  bk: Float32Array;
  wv: Float32Array;
  bv: Float32Array;
  wo: Float32Array;
  bo: Float32Array;
  ln1Gamma: Float32Array;
  ln1Beta: Float32Array;
  w1: Float32Array;
  b1: Float32Array;
  w2: Float32Array;
  b2: Float32Array;
  ln2Gamma: Float32Array;
  ln2Beta: Float32Array;
}

export interface EncoderWeights {
  tokenEmb: Float32Array;
  posEmb: Float32Array;
  embLnGamma: Float32Array;
  embLnBeta: Float32Array;
  layers: LayerWeights[];
}

export interface Encoder {
  config: EncoderConfig;
  weights: EncoderWeights;
}

function layerBlocks(config: EncoderConfig): Array<[keyof LayerWeights, number]> {
  const h = config.hidden;
  return [
    ["wq", h * h], ["bq", h], ["wk", h * h], ["bk", h], ["wv", h * h], ["bv", h],
    ["wo", h * h], ["bo", h], ["ln1Gamma", h], ["ln1Beta", h],
    ["w1", config.ffn * h], ["b1", config.ffn], ["w2", h * config.ffn], ["b2", h],
    ["ln2Gamma", h], ["ln2Beta", h],
  ];
}

export function writeEncoder(path: string, encoder: Encoder): void {
  const header = Buffer.from(JSON.stringify({ ...encoder.config }), "utf-8");
  const blocks: Float32Array[] = [
    encoder.weights.tokenEmb,
    encoder.weights.posEmb,
    encoder.weights.embLnGamma,
    encoder.weights.embLnBeta,
  ];
  for (const layer of encoder.weights.layers) {
    for (const [name] of layerBlocks(encoder.config)) blocks.push(layer[name]);
  }
  const payload = Buffer.concat(
    blocks.map((block) => Buffer.from(block.buffer, block.byteOffset, block.byteLength)),
  );
  const head = Buffer.alloc(12);
  head.write(MAGIC, 0, "ascii");
  head.writeUInt32LE(VERSION, 4);
  head.writeUInt32LE(header.length, 8);
  const tmp = path + ".tmp";
  writeFileSync(tmp, Buffer.concat([head, header, payload]));
  renameSync(tmp, path); // atomic publish
}

export function readEncoder(path: string): Encoder {
  const blob = readFileSync(path);
  if (blob.length < 12 || blob.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`${path}: not an encoder checkpoint (bad magic)`);
  }
  const version = blob.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`${path}: unsupported checkpoint version ${version}`);
  const headerLen = blob.readUInt32LE(8);
  const config = JSON.parse(blob.toString("utf-8", 12, 12 + headerLen)) as EncoderConfig;
  let offset = 12 + headerLen;

  const take = (count: number): Float32Array => {
    const bytes = count * 4;
    if (offset + bytes > blob.length) throw new Error(`${path}: truncated weights at byte ${offset}`);
    const out = new Float32Array(count);
    for (let i = 0; i < count; i++) out[i] = blob.readFloatLE(offset + 4 * i);
    offset += bytes;
    return out;
  };

  const weights: EncoderWeights = {
    tokenEmb: take(config.vocab.length * config.hidden),
    posEmb: take(config.maxLen * config.hidden),
    embLnGamma: take(config.hidden),
    embLnBeta: take(config.hidden),
    layers: [],
  };
  for (let l = 0; l < config.layers; l++) {
    const layer = {} as LayerWeights;
    for (const [name, count] of layerBlocks(config)) layer[name] = take(count);
    weights.layers.push(layer);
  }
  if (offset !== blob.length) throw new Error(`${path}: trailing bytes after weights at ${offset}`);
  return { config, weights };
}

/** mulberry32: tiny deterministic PRNG, good enough for test weights. */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussianArray(count: number, std: number, rand: () => number): Float32Array {
  const out = new Float32Array(count);
  for (let i = 0; i < count; i += 2) {
    const u = Math.max(rand(), 1e-12);
    const v = rand();
    const r = Math.sqrt(-2.0 * Math.log(u));
    out[i] = r * Math.cos(2 * Math.PI * v) * std;
    if (i + 1 < count) out[i + 1] = r * Math.sin(2 * Math.PI * v) * std;
  }
  return out;
}

/**
 * Deterministic randomly-initialized encoder for tests and demos. Real
 * pretrained weights arrive through the same checkpoint format.
 */
export function generateEncoder(
  vocab: string[],
  seed: number,
  options: Partial<Omit<EncoderConfig, "vocab">> = {},
): Encoder {
  const config: EncoderConfig = {
    hidden: options.hidden ?? 768,
    layers: options.layers ?? 2,
    heads: options.heads ?? 4,
    ffn: options.ffn ?? 1536,
    maxLen: options.maxLen ?? 128,
    vocab,
  };
  if (config.hidden % config.heads !== 0) throw new Error("hidden must be divisible by heads");
  const rand = mulberry32(seed);
  const h = config.hidden;
  const std = 0.04; // keeps residual-stream magnitudes tame through the layers
  const ones = (n: number) => new Float32Array(n).fill(1);
  const weights: EncoderWeights = {
    tokenEmb: gaussianArray(vocab.length * h, 1.0, rand),
    posEmb: gaussianArray(config.maxLen * h, 0.5, rand),
    embLnGamma: ones(h),
    embLnBeta: new Float32Array(h),
    layers: [],
  };
  for (let l = 0; l < config.layers; l++) {
    weights.layers.push({
      wq: gaussianArray(h * h, std, rand),
      bq: new Float32Array(h),
      wk: gaussianArray(h * h, std, rand),
      bk: new Float32Array(h),
      wv: gaussianArray(h * h, std, rand),
      bv: new Float32Array(h),
      wo: gaussianArray(h * h, std, rand),
      bo: new Float32Array(h),
      ln1Gamma: ones(h),
      ln1Beta: new Float32Array(h),
      w1: gaussianArray(config.ffn * h, std, rand),
      b1: new Float32Array(config.ffn),
      w2: gaussianArray(h * config.ffn, std, rand),
      b2: new Float32Array(h),
      ln2Gamma: ones(h),
      ln2Beta: new Float32Array(h),
    });
  }
  return { config, weights };
}
