/** Miniature checkpoint builder: masked-LM pretraining over raw text.
 *
 * This is a fixture, not part of the fine-tuning recipe: it stands in for
 * the large public checkpoints so tests run without downloads.  Labels in
 * the input dataset are ignored; only the text is used.
 */

import { initBackend, tf } from './backend';
import { readDataset } from './data';
import { DEFAULT_CONFIG, ModelConfig, TinyBert, padBatch } from './model';
import { Rng } from './rng';
import { MASK, SPECIAL_TOKENS, buildVocab, encode } from './tokenizer';

export interface PretrainOptions {
  dim?: number;
  numLayers?: number;
  numHeads?: number;
  ffDim?: number;
  maxSequenceLength?: number;
  epochs?: number;
  batchSize?: number;
  learningRate?: number;
  seed?: number;
}

export interface PretrainResult {
  dir: string;
  epochLosses: number[];
  vocabSize: number;
}

export async function pretrain(
  inputPath: string,
  outDir: string,
  options: PretrainOptions = {},
): Promise<PretrainResult> {
  await initBackend();
  const epochs = options.epochs ?? 8;
  const batchSize = options.batchSize ?? 32;
  const learningRate = options.learningRate ?? 1e-3;
  const seed = options.seed ?? 0;
  const config: ModelConfig = {
    ...DEFAULT_CONFIG,
    dim: options.dim ?? DEFAULT_CONFIG.dim,
    numLayers: options.numLayers ?? DEFAULT_CONFIG.numLayers,
    numHeads: options.numHeads ?? DEFAULT_CONFIG.numHeads,
    ffDim: options.ffDim ?? DEFAULT_CONFIG.ffDim,
    maxSequenceLength: options.maxSequenceLength ?? DEFAULT_CONFIG.maxSequenceLength,
    seed,
  };

  const texts = readDataset(inputPath).map((r) => r.text);
  const vocab = buildVocab(texts);
  const model = TinyBert.init(config, vocab);
  const encoded = texts
    .map((t) => encode(vocab, t, config.maxSequenceLength))
    .filter((ids) => ids.length >= 2);
  if (encoded.length === 0) {
    throw new Error('pretraining stream is empty');
  }

  const optimizer = tf.train.adam(learningRate);
  const rng = new Rng(seed * 7919 + 13);
  const V = vocab.tokens.length;
  const epochLosses: number[] = [];

  for (let epoch = 0; epoch < epochs; epoch++) {
    const order = rng.permutation(encoded.length);
    let lossSum = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += batchSize) {
      const batchIdx = order.slice(start, start + batchSize);
      const original = batchIdx.map((i) => encoded[i]);
      // standard 15% corruption: 80% [MASK], 10% random, 10% keep
      const corrupted = original.map((seq) => seq.slice());
      const targetMask = original.map((seq) => seq.map(() => 0));
      original.forEach((seq, i) => {
        let masked = 0;
        seq.forEach((_, j) => {
          if (rng.next() < 0.15) {
            targetMask[i][j] = 1;
            masked += 1;
            const roll = rng.next();
            if (roll < 0.8) corrupted[i][j] = MASK;
            else if (roll < 0.9) corrupted[i][j] = SPECIAL_TOKENS.length + rng.int(V - SPECIAL_TOKENS.length);
          }
        });
        if (masked === 0) {
          const j = rng.int(seq.length);
          targetMask[i][j] = 1;
          corrupted[i][j] = MASK;
        }
      });

      const lossValue = tf.tidy(() => {
        const { ids, mask, length } = padBatch(corrupted, config.maxSequenceLength);
        const { ids: targets } = padBatch(original, config.maxSequenceLength);
        const b = batchIdx.length;
        const weightData = new Float32Array(b * length);
        targetMask.forEach((row, i) => {
          row.slice(0, length).forEach((w, j) => {
            weightData[i * length + j] = w;
          });
        });
        const weights = tf.tensor(weightData, [b, length]);
        const loss = () =>
          tf.tidy(() => {
            const logits = model.mlmLogits(ids, mask).reshape([b * length, V]);
            const flatTargets = targets.reshape([b * length]).cast('int32');
            const logProbs = tf.logSoftmax(logits);
            const picked = tf.sum(tf.mul(tf.oneHot(flatTargets, V), logProbs), -1);
            const w = weights.reshape([b * length]);
            return tf.div(tf.sum(tf.mul(tf.neg(picked), w)), tf.maximum(tf.sum(w), 1)) as tf.Scalar;
          });
        const { value, grads } = tf.variableGrads(loss, model.trainableVars());
        optimizer.applyGradients(grads as unknown as Parameters<typeof optimizer.applyGradients>[0]);
        Object.values(grads).forEach((g) => g.dispose());
        return value.dataSync()[0];
      });
      lossSum += lossValue;
      batches += 1;
    }
    epochLosses.push(lossSum / Math.max(batches, 1));
  }

  optimizer.dispose();
  model.save(outDir, {
    kind: 'pretrained',
    pretraining: { epochs, batchSize, learningRate, objective: 'masked-lm', input: 'text-only' },
  });
  model.dispose();
  return { dir: outDir, epochLosses, vocabSize: V };
}
