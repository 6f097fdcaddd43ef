/** Emit predictions for a dataset in the shared JSONL schema:
 * {sentence_id, predicted_label, scores} with softmax scores over the
 * four classes.  Byte-compatible with the baseline predictions files
 * (the extra scores field is tolerated by the evaluator). */

import * as fs from 'fs';
import { initBackend, tf } from './backend';
import { LABELS, readDataset } from './data';
import { TinyBert, padBatch } from './model';
import { encode } from './tokenizer';

export interface PredictionRecord {
  sentence_id: string;
  predicted_label: string;
  scores: number[];
}

export async function predictFile(
  modelDir: string,
  inputPath: string,
  outPath: string,
  batchSize = 32,
): Promise<PredictionRecord[]> {
  await initBackend();
  const records = readDataset(inputPath); // rejects id collisions up front
  const model = TinyBert.load(modelDir);
  const cap = model.config.maxSequenceLength;
  const out: PredictionRecord[] = [];

  for (let start = 0; start < records.length; start += batchSize) {
    const batch = records.slice(start, start + batchSize);
    const probs = tf.tidy(() => {
      const { ids, mask } = padBatch(batch.map((r) => encode(model.vocab, r.text, cap)), cap);
      return tf.softmax(model.classifierLogits(ids, mask)).dataSync() as Float32Array;
    });
    batch.forEach((record, i) => {
      const scores = Array.from(probs.slice(i * LABELS.length, (i + 1) * LABELS.length));
      const total = scores.reduce((a, b) => a + b, 0);
      const normalized = scores.map((s) => s / total);
      let best = 0;
      for (let c = 1; c < normalized.length; c++) {
        if (normalized[c] > normalized[best]) best = c;
      }
      out.push({
        sentence_id: record.sentenceId,
        predicted_label: LABELS[best],
        scores: normalized,
      });
    });
  }
  model.dispose();
  fs.writeFileSync(outPath, out.map((r) => JSON.stringify(r)).join('\n') + '\n');
  return out;
}
