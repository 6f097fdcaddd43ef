/** Triangular cyclical learning rate between 0 and `peak`, cycle length
 * fixed at two epochs: ramp up for one epoch, back down for the next. */
export function cyclicalLearningRate(step: number, stepsPerEpoch: number, peak: number): number {
  const stepsPerCycle = 2 * stepsPerEpoch;
  const frac = ((step + 0.5) / stepsPerCycle) % 1;
  return peak * (1 - Math.abs(2 * frac - 1));
}
