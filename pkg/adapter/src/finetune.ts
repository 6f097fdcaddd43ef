/** Fine-tune a pretrained checkpoint for four-class sentence labeling.
 *
 * Recipe: maximum sequence length 128, batch size 32, Adam with a
 * triangular cyclical learning rate peaking at 3e-5 (cycle = 2 epochs),
 * cross-entropy loss, 6 epochs, dropout + linear(4) head.  The training
 * log records, per epoch, the learning rate at the epoch's final step,
 * the mean train loss evaluated at epoch end, and validation per-class
 * F1; an epoch-0 row captures the untrained baseline.
 */

import * as fs from 'fs';
import * as path from 'path';
import { initBackend, tf } from './backend';
import { DatasetRecord, LABELS, NUM_CLASSES, labelIndex, readDataset } from './data';
import { perClassF1 } from './metrics';
import { TinyBert, padBatch } from './model';
import { Rng } from './rng';
import { cyclicalLearningRate } from './schedule';
import { encode } from './tokenizer';

export interface FineTuneConfig {
  checkpoint: string;
  maxSequenceLength: number;
  batchSize: number;
  peakLearningRate: number;
  epochs: number;
  dropout: number;
  seed: number;
}

export const DEFAULT_FINETUNE: Omit<FineTuneConfig, 'checkpoint'> = {
  maxSequenceLength: 128,
  batchSize: 32,
  peakLearningRate: 3e-5,
  epochs: 6,
  dropout: 0.1,
  seed: 0,
};

export interface EpochLog {
  epoch: number;
  learningRate: number;
  trainLoss: number;
  validF1: number[]; // per class, LABELS order
}

export interface FineTuneResult {
  modelDir: string;
  logPath: string;
  log: EpochLog[];
}

function encodeAll(model: TinyBert, records: DatasetRecord[], maxLen: number) {
  const cap = Math.min(maxLen, model.config.maxSequenceLength);
  return records.map((r) => ({
    ids: encode(model.vocab, r.text, cap),
    label: labelIndex(r.label),
  }));
}

function meanLoss(model: TinyBert, data: { ids: number[]; label: number }[], batchSize: number): number {
  let total = 0;
  for (let start = 0; start < data.length; start += batchSize) {
    const batch = data.slice(start, start + batchSize);
    const value = tf.tidy(() => {
      const { ids, mask } = padBatch(batch.map((b) => b.ids), model.config.maxSequenceLength);
      const logits = model.classifierLogits(ids, mask);
      const labels = tf.tensor(batch.map((b) => b.label), [batch.length], 'int32');
      const logProbs = tf.logSoftmax(logits);
      const picked = tf.sum(tf.mul(tf.oneHot(labels, NUM_CLASSES), logProbs), -1);
      return tf.neg(tf.sum(picked)).dataSync()[0];
    });
    total += value;
  }
  return total / data.length;
}

function predictCodes(model: TinyBert, data: { ids: number[] }[], batchSize: number): number[] {
  const out: number[] = [];
  for (let start = 0; start < data.length; start += batchSize) {
    const batch = data.slice(start, start + batchSize);
    const codes = tf.tidy(() => {
      const { ids, mask } = padBatch(batch.map((b) => b.ids), model.config.maxSequenceLength);
      return model.classifierLogits(ids, mask).argMax(-1).dataSync();
    });
    out.push(...Array.from(codes as Int32Array));
  }
  return out;
}

export async function fineTune(
  trainPath: string,
  validPath: string,
  config: FineTuneConfig,
  outDir: string,
): Promise<FineTuneResult> {
  await initBackend();
  // schema validation happens here, before any training
  const trainRecords = readDataset(trainPath);
  const validRecords = readDataset(validPath);
  if (trainRecords.length === 0) throw new Error(`${trainPath}: training set is empty`);

  const model = TinyBert.load(config.checkpoint);
  const train = encodeAll(model, trainRecords, config.maxSequenceLength);
  const valid = encodeAll(model, validRecords, config.maxSequenceLength);
  const validGold = valid.map((v) => v.label);

  const optimizer = tf.train.adam(config.peakLearningRate);
  const rng = new Rng(config.seed * 1000003 + 41);
  const stepsPerEpoch = Math.ceil(train.length / config.batchSize);
  const dim = model.config.dim;

  const log: EpochLog[] = [];
  const record = (epoch: number, lr: number) => {
    const trainLoss = meanLoss(model, train, config.batchSize);
    const validF1 = valid.length ? perClassF1(validGold, predictCodes(model, valid, config.batchSize)) : new Array(NUM_CLASSES).fill(0);
    log.push({ epoch, learningRate: lr, trainLoss, validF1 });
  };
  record(0, 0);

  let step = 0;
  for (let epoch = 1; epoch <= config.epochs; epoch++) {
    const order = rng.permutation(train.length);
    let lastLr = 0;
    for (let start = 0; start < order.length; start += config.batchSize) {
      const batch = order.slice(start, start + config.batchSize).map((i) => train[i]);
      const lr = cyclicalLearningRate(step, stepsPerEpoch, config.peakLearningRate);
      lastLr = lr;
      (optimizer as unknown as { learningRate: number }).learningRate = lr;

      // seeded dropout mask for the classifier head (inverted scaling)
      const keep = 1 - config.dropout;
      const maskData = new Float32Array(batch.length * dim);
      for (let i = 0; i < maskData.length; i++) {
        maskData[i] = rng.next() < keep ? 1 / keep : 0;
      }

      tf.tidy(() => {
        const { ids, mask } = padBatch(batch.map((b) => b.ids), model.config.maxSequenceLength);
        const labels = tf.tensor(batch.map((b) => b.label), [batch.length], 'int32');
        const dropoutMask = tf.tensor(maskData, [batch.length, dim]);
        const loss = () =>
          tf.tidy(() => {
            const logits = model.classifierLogits(ids, mask, dropoutMask);
            const logProbs = tf.logSoftmax(logits);
            const picked = tf.sum(tf.mul(tf.oneHot(labels, NUM_CLASSES), logProbs), -1);
            return tf.neg(tf.mean(picked)) as tf.Scalar;
          });
        const { value, grads } = tf.variableGrads(loss, model.trainableVars());
        optimizer.applyGradients(grads as unknown as Parameters<typeof optimizer.applyGradients>[0]);
        Object.values(grads).forEach((g) => g.dispose());
        value.dispose();
      });
      step += 1;
    }
    record(epoch, lastLr);
  }
  optimizer.dispose();

  fs.mkdirSync(outDir, { recursive: true });
  model.save(outDir, {
    kind: 'finetuned',
    labels: LABELS,
    hyperparameters: {
      checkpoint: config.checkpoint,
      maxSequenceLength: config.maxSequenceLength,
      batchSize: config.batchSize,
      peakLearningRate: config.peakLearningRate,
      schedule: 'triangular-cyclical-2epoch',
      epochs: config.epochs,
      dropout: config.dropout,
      optimizer: 'adam',
      loss: 'cross-entropy',
      seed: config.seed,
    },
  });
  model.dispose();

  const logPath = path.join(outDir, 'training-log.csv');
  const header = 'epoch,lr,train_loss,' + LABELS.map((l) => `f1_${l}`).join(',');
  const rows = log.map((e) =>
    [e.epoch, e.learningRate.toExponential(6), e.trainLoss.toFixed(6),
     ...e.validF1.map((f) => f.toFixed(6))].join(','));
  fs.writeFileSync(logPath, [header, ...rows].join('\n') + '\n');
  return { modelDir: outDir, logPath, log };
}
