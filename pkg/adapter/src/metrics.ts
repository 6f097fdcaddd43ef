import { NUM_CLASSES } from './data';

/** Per-class F1 with the zero-denominator-is-zero convention. */
export function perClassF1(gold: number[], pred: number[]): number[] {
  const tp = new Array(NUM_CLASSES).fill(0);
  const fp = new Array(NUM_CLASSES).fill(0);
  const fn = new Array(NUM_CLASSES).fill(0);
  for (let i = 0; i < gold.length; i++) {
    if (gold[i] === pred[i]) {
      tp[gold[i]] += 1;
    } else {
      fp[pred[i]] += 1;
      fn[gold[i]] += 1;
    }
  }
  return tp.map((t, c) => {
    const precision = t + fp[c] > 0 ? t / (t + fp[c]) : 0;
    const recall = t + fn[c] > 0 ? t / (t + fn[c]) : 0;
    return precision + recall > 0 ? (2 * precision * recall) / (precision + recall) : 0;
  });
}
