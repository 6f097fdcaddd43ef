/** Miniature BERT-style encoder implemented directly on tfjs ops.
 *
 * Pre-LN transformer blocks over word embeddings with learned positions;
 * sentence representation is the mask-weighted mean of the final hidden
 * states.  The masked-LM head ties its projection to the embedding
 * matrix; the classification head is dropout + a linear layer with four
 * outputs.  All weights are created from the adapter's own seeded PRNG
 * so checkpoints are backend-independent.
 */

import * as fs from 'fs';
import * as path from 'path';
import { tf } from './backend';
import { NUM_CLASSES } from './data';
import { Rng } from './rng';
import { Vocab, vocabFromTokens } from './tokenizer';

export interface ModelConfig {
  dim: number;
  numLayers: number;
  numHeads: number;
  ffDim: number;
  maxSequenceLength: number;
  dropout: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  dim: 64,
  numLayers: 2,
  numHeads: 2,
  ffDim: 256,
  maxSequenceLength: 128,
  dropout: 0.1,
  seed: 0,
};

type Vars = Map<string, tf.Variable>;

export class TinyBert {
  readonly config: ModelConfig;
  readonly vocab: Vocab;
  readonly vars: Vars = new Map();

  constructor(config: ModelConfig, vocab: Vocab) {
    this.config = config;
    this.vocab = vocab;
  }

  private addVar(name: string, values: Float32Array, shape: number[]): void {
    // no explicit tfjs name: the engine requires global uniqueness and the
    // vars map is the canonical addressing anyway
    this.vars.set(name, tf.variable(tf.tensor(values, shape), true));
  }

  /** Fresh randomly initialized model (used by the pretraining fixture). */
  static init(config: ModelConfig, vocab: Vocab): TinyBert {
    const model = new TinyBert(config, vocab);
    const rng = new Rng(config.seed * 2654435761 + 97);
    const { dim, ffDim, numLayers, maxSequenceLength } = config;
    const V = vocab.tokens.length;
    const std = 0.02;

    model.addVar('embed', rng.normalArray(V * dim, std), [V, dim]);
    model.addVar('pos', rng.normalArray(maxSequenceLength * dim, std), [maxSequenceLength, dim]);
    model.addVar('mlm_bias', new Float32Array(V), [V]);
    for (let l = 0; l < numLayers; l++) {
      for (const name of ['q', 'k', 'v', 'o']) {
        model.addVar(`L${l}.attn.${name}.w`, rng.normalArray(dim * dim, std), [dim, dim]);
        model.addVar(`L${l}.attn.${name}.b`, new Float32Array(dim), [dim]);
      }
      model.addVar(`L${l}.ff.w1`, rng.normalArray(dim * ffDim, std), [dim, ffDim]);
      model.addVar(`L${l}.ff.b1`, new Float32Array(ffDim), [ffDim]);
      model.addVar(`L${l}.ff.w2`, rng.normalArray(ffDim * dim, std), [ffDim, dim]);
      model.addVar(`L${l}.ff.b2`, new Float32Array(dim), [dim]);
      for (const ln of ['ln1', 'ln2']) {
        model.addVar(`L${l}.${ln}.g`, new Float32Array(dim).fill(1), [dim]);
        model.addVar(`L${l}.${ln}.b`, new Float32Array(dim), [dim]);
      }
    }
    model.addVar('lnf.g', new Float32Array(dim).fill(1), [dim]);
    model.addVar('lnf.b', new Float32Array(dim), [dim]);
    // classifier head starts at zero: predictions are driven purely by
    // accumulated fine-tuning signal, not initialization noise
    model.addVar('cls.w', new Float32Array(dim * NUM_CLASSES), [dim, NUM_CLASSES]);
    model.addVar('cls.b', new Float32Array(NUM_CLASSES), [NUM_CLASSES]);
    return model;
  }

  v(name: string): tf.Variable {
    const variable = this.vars.get(name);
    if (!variable) throw new Error(`missing model variable ${name}`);
    return variable;
  }

  trainableVars(): tf.Variable[] {
    return [...this.vars.values()];
  }

  private layerNorm(x: tf.Tensor, gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor {
    const mean = tf.mean(x, -1, true);
    const centered = tf.sub(x, mean);
    const variance = tf.mean(tf.square(centered), -1, true);
    const normed = tf.div(centered, tf.sqrt(tf.add(variance, 1e-5)));
    return tf.add(tf.mul(normed, gamma), beta);
  }

  private gelu(x: tf.Tensor): tf.Tensor {
    // tanh approximation; composes from wasm-supported primitives
    const c = Math.sqrt(2 / Math.PI);
    const inner = tf.mul(tf.add(x, tf.mul(tf.pow(x, 3), 0.044715)), c);
    return tf.mul(tf.mul(x, 0.5), tf.add(tf.tanh(inner), 1));
  }

  private attention(x: tf.Tensor, mask: tf.Tensor, layer: number): tf.Tensor {
    const { dim, numHeads } = this.config;
    const headDim = dim / numHeads;
    const [b, s] = x.shape as number[];
    const proj = (name: string) =>
      tf.add(tf.matMul(x.reshape([b * s, dim]), this.v(`L${layer}.attn.${name}.w`)),
             this.v(`L${layer}.attn.${name}.b`))
        .reshape([b, s, numHeads, headDim])
        .transpose([0, 2, 1, 3]); // [B,H,S,K]
    const q = proj('q');
    const k = proj('k');
    const vv = proj('v');
    let scores = tf.div(tf.matMul(q, k, false, true), Math.sqrt(headDim)); // [B,H,S,S]
    const bias = tf.mul(tf.sub(mask.reshape([b, 1, 1, s]), 1), 1e9); // 0 keep, -1e9 drop
    scores = tf.add(scores, bias);
    const attn = tf.softmax(scores);
    const ctx = tf.matMul(attn, vv) // [B,H,S,K]
      .transpose([0, 2, 1, 3])
      .reshape([b * s, dim]);
    return tf.add(tf.matMul(ctx, this.v(`L${layer}.attn.o.w`)), this.v(`L${layer}.attn.o.b`))
      .reshape([b, s, dim]);
  }

  /** Final hidden states [B,S,D] for padded id batch + mask. */
  hidden(ids: tf.Tensor, mask: tf.Tensor): tf.Tensor {
    const { dim, numLayers } = this.config;
    const [b, s] = ids.shape as number[];
    const V = this.vocab.tokens.length;
    // one-hot matmul embedding lookup: differentiable with plain matMul
    const oneHot = tf.oneHot(ids.cast('int32'), V).reshape([b * s, V]);
    let x = tf.matMul(oneHot, this.v('embed')).reshape([b, s, dim]);
    const positions = this.v('pos').slice([0, 0], [s, dim]).reshape([1, s, dim]);
    x = tf.add(x, positions);
    for (let l = 0; l < numLayers; l++) {
      const a = this.attention(this.layerNorm(x, this.v(`L${l}.ln1.g`), this.v(`L${l}.ln1.b`)), mask, l);
      x = tf.add(x, a);
      const h = this.layerNorm(x, this.v(`L${l}.ln2.g`), this.v(`L${l}.ln2.b`));
      const ff = tf.add(
        tf.matMul(
          this.gelu(tf.add(tf.matMul(h.reshape([b * s, dim]), this.v(`L${l}.ff.w1`)), this.v(`L${l}.ff.b1`))),
          this.v(`L${l}.ff.w2`)),
        this.v(`L${l}.ff.b2`)).reshape([b, s, dim]);
      x = tf.add(x, ff);
    }
    return this.layerNorm(x, this.v('lnf.g'), this.v('lnf.b'));
  }

  /** Mask-weighted mean pooling -> [B,D]. */
  pooled(ids: tf.Tensor, mask: tf.Tensor): tf.Tensor {
    const h = this.hidden(ids, mask);
    const m = mask.expandDims(-1); // [B,S,1]
    const summed = tf.sum(tf.mul(h, m), 1);
    const counts = tf.maximum(tf.sum(m, 1), 1);
    return tf.div(summed, counts);
  }

  /** Classifier logits [B,4]; dropoutMask (precomputed, seeded) applies
   * only during training. */
  classifierLogits(ids: tf.Tensor, mask: tf.Tensor, dropoutMask?: tf.Tensor): tf.Tensor {
    let pooledOut = this.pooled(ids, mask);
    if (dropoutMask) {
      pooledOut = tf.mul(pooledOut, dropoutMask);
    }
    return tf.add(tf.matMul(pooledOut, this.v('cls.w')), this.v('cls.b'));
  }

  /** Masked-LM logits over the vocabulary, tied to the embedding matrix. */
  mlmLogits(ids: tf.Tensor, mask: tf.Tensor): tf.Tensor {
    const { dim } = this.config;
    const [b, s] = ids.shape as number[];
    const h = this.hidden(ids, mask).reshape([b * s, dim]);
    return tf.add(tf.matMul(h, this.v('embed'), false, true), this.v('mlm_bias'))
      .reshape([b, s, this.vocab.tokens.length]);
  }

  save(dir: string, extraConfig: Record<string, unknown> = {}): void {
    fs.mkdirSync(dir, { recursive: true });
    const weights: Record<string, { shape: number[]; data: number[] }> = {};
    for (const [name, variable] of this.vars) {
      weights[name] = {
        shape: variable.shape.slice(),
        data: Array.from(variable.dataSync() as Float32Array),
      };
    }
    const config = {
      ...this.config,
      vocab: this.vocab.tokens,
      ...extraConfig,
    };
    fs.writeFileSync(path.join(dir, 'config.json'), JSON.stringify(config, null, 1));
    fs.writeFileSync(path.join(dir, 'weights.json'), JSON.stringify(weights));
  }

  static load(dir: string): TinyBert {
    const configPath = path.join(dir, 'config.json');
    if (!fs.existsSync(configPath)) {
      throw new Error(`checkpoint not resolvable: ${configPath} does not exist`);
    }
    const raw = JSON.parse(fs.readFileSync(configPath, 'utf-8'));
    const config: ModelConfig = {
      dim: raw.dim,
      numLayers: raw.numLayers,
      numHeads: raw.numHeads,
      ffDim: raw.ffDim,
      maxSequenceLength: raw.maxSequenceLength,
      dropout: raw.dropout,
      seed: raw.seed,
    };
    const vocab = vocabFromTokens(raw.vocab);
    const model = new TinyBert(config, vocab);
    const weights = JSON.parse(fs.readFileSync(path.join(dir, 'weights.json'), 'utf-8'));
    for (const [name, entry] of Object.entries(weights) as [string, { shape: number[]; data: number[] }][]) {
      model.addVarFromSaved(name, entry);
    }
    return model;
  }

  private addVarFromSaved(name: string, entry: { shape: number[]; data: number[] }): void {
    this.addVar(name, Float32Array.from(entry.data), entry.shape);
  }

  dispose(): void {
    for (const variable of this.vars.values()) variable.dispose();
    this.vars.clear();
  }
}

/** Pad a batch of id sequences to a common length; returns ids + mask. */
export function padBatch(sequences: number[][], maxLen: number): { ids: tf.Tensor; mask: tf.Tensor; length: number } {
  const length = Math.max(1, Math.min(maxLen, Math.max(...sequences.map((s) => s.length), 1)));
  const b = sequences.length;
  const ids = new Int32Array(b * length);
  const mask = new Float32Array(b * length);
  sequences.forEach((seq, i) => {
    const n = Math.min(seq.length, length);
    for (let j = 0; j < n; j++) {
      ids[i * length + j] = seq[j];
      mask[i * length + j] = 1;
    }
  });
  return {
    ids: tf.tensor(ids, [b, length], 'int32'),
    mask: tf.tensor(mask, [b, length], 'float32'),
    length,
  };
}
