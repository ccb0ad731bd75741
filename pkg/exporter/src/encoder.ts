/**
 * Transformer encoder forward pass (BERT layout): token + position
 * embeddings with layer norm, then per layer multi-head self-attention and
 * a GELU feed-forward block, each with residual connection and layer norm.
 *
 * Hidden states are computed only for non-pad positions; with padding
 * masked out of the attention softmax this is exactly equivalent to
 * running the full padded sequence.
 */

import type { Encoder } from "./checkpoint.js";
import type { TokenSequence } from "./tokenizer.js";

const LN_EPS = 1e-12;

function layerNorm(x: Float32Array, positions: number, hidden: number, gamma: Float32Array, beta: Float32Array): void {
  for (let p = 0; p < positions; p++) {
    const base = p * hidden;
    let mean = 0;
    for (let i = 0; i < hidden; i++) mean += x[base + i];
    mean /= hidden;
    let variance = 0;
    for (let i = 0; i < hidden; i++) {
      const d = x[base + i] - mean;
      variance += d * d;
    }
    variance /= hidden;
    const inv = 1.0 / Math.sqrt(variance + LN_EPS);
    for (let i = 0; i < hidden; i++) {
      x[base + i] = (x[base + i] - mean) * inv * gamma[i] + beta[i];
    }
  }
}

/** y[p] = W x[p] + b for row-major W [out x in]. */
function linear(
  x: Float32Array,
  positions: number,
  inDim: number,
  outDim: number,
  w: Float32Array,
  b: Float32Array,
): Float32Array {
  const y = new Float32Array(positions * outDim);
  for (let p = 0; p < positions; p++) {
    const xBase = p * inDim;
    const yBase = p * outDim;
    for (let o = 0; o < outDim; o++) {
      const wBase = o * inDim;
      let acc = b[o];
      for (let i = 0; i < inDim; i++) acc += w[wBase + i] * x[xBase + i];
      y[yBase + o] = acc;
    }
  }
  return y;
}

function gelu(x: Float32Array): void {
  const c = Math.sqrt(2.0 / Math.PI);
  for (let i = 0; i < x.length; i++) {
    const v = x[i];
    x[i] = 0.5 * v * (1.0 + Math.tanh(c * (v + 0.044715 * v * v * v)));
  }
}

function selfAttention(x: Float32Array, positions: number, encoder: Encoder, layerIndex: number): Float32Array {
  const { hidden, heads } = encoder.config;
  const layer = encoder.weights.layers[layerIndex];
  const headDim = hidden / heads;
  const scale = 1.0 / Math.sqrt(headDim);

  const q = linear(x, positions, hidden, hidden, layer.wq, layer.bq);
  const k = linear(x, positions, hidden, hidden, layer.wk, layer.bk);
  const v = linear(x, positions, hidden, hidden, layer.wv, layer.bv);

  const context = new Float32Array(positions * hidden);
  const scores = new Float32Array(positions);
  for (let h = 0; h < heads; h++) {
    const offset = h * headDim;
    for (let p = 0; p < positions; p++) {
      let max = -Infinity;
      for (let t = 0; t < positions; t++) {
        let dot = 0;
        const qBase = p * hidden + offset;
        const kBase = t * hidden + offset;
        for (let d = 0; d < headDim; d++) dot += q[qBase + d] * k[kBase + d];
        scores[t] = dot * scale;
        if (scores[t] > max) max = scores[t];
      }
      let total = 0;
      for (let t = 0; t < positions; t++) {
        scores[t] = Math.exp(scores[t] - max);
        total += scores[t];
      }
      const outBase = p * hidden + offset;
      for (let d = 0; d < headDim; d++) {
        let acc = 0;
        for (let t = 0; t < positions; t++) acc += (scores[t] / total) * v[t * hidden + offset + d];
        context[outBase + d] = acc;
      }
    }
  }
  return linear(context, positions, hidden, hidden, layer.wo, layer.bo);
}

/** Final hidden states for the non-pad positions: (attentionLength x hidden). */
export function encode(encoder: Encoder, seq: TokenSequence): Float32Array {
  const { hidden, maxLen } = encoder.config;
  const positions = seq.attentionLength;
  if (positions < 1 || positions > maxLen) throw new Error(`sequence length ${positions} out of range`);

  const x = new Float32Array(positions * hidden);
  for (let p = 0; p < positions; p++) {
    const tokenId = seq.ids[p];
    if (tokenId < 0 || tokenId >= encoder.config.vocab.length) {
      throw new Error(`token id ${tokenId} outside the encoder vocabulary`);
    }
    const tokBase = tokenId * hidden;
    const posBase = p * hidden;
    for (let i = 0; i < hidden; i++) {
      x[p * hidden + i] = encoder.weights.tokenEmb[tokBase + i] + encoder.weights.posEmb[posBase + i];
    }
  }
  layerNorm(x, positions, hidden, encoder.weights.embLnGamma, encoder.weights.embLnBeta);

  let states: Float32Array = x;
  for (let l = 0; l < encoder.config.layers; l++) {
    const layer = encoder.weights.layers[l];
    const attended = selfAttention(states, positions, encoder, l);
    for (let i = 0; i < states.length; i++) attended[i] += states[i];
    layerNorm(attended, positions, hidden, layer.ln1Gamma, layer.ln1Beta);

    const inner = linear(attended, positions, hidden, encoder.config.ffn, layer.w1, layer.b1);
    gelu(inner);
    const projected = linear(inner, positions, encoder.config.ffn, hidden, layer.w2, layer.b2);
    for (let i = 0; i < projected.length; i++) projected[i] += attended[i];
    layerNorm(projected, positions, hidden, layer.ln2Gamma, layer.ln2Beta);
    states = projected;
  }
  return states;
}

/** CLS pooling: the final hidden state at position 0. */
export function clsVector(states: Float32Array, hidden: number): Float32Array {
  const out = new Float32Array(hidden);
  out.set(states.subarray(0, hidden));
  return out;
}

/** Mean pooling over the non-padding positions of the last hidden layer. */
export function meanVector(states: Float32Array, positions: number, hidden: number): Float32Array {
  const out = new Float32Array(hidden);
  for (let p = 0; p < positions; p++) {
    const base = p * hidden;
    for (let i = 0; i < hidden; i++) out[i] += states[base + i];
  }
  for (let i = 0; i < hidden; i++) out[i] /= positions;
  return out;
}
