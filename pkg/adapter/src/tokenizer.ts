/** Word-level tokenizer shared by pretraining and fine-tuning.
 * Lowercased alphanumeric runs; internal hyphens/slashes survive so
 * clinical shorthand like "phq-9" and "r/o" stays one token. */

export const PAD = 0;
export const UNK = 1;
export const MASK = 2;
export const SPECIAL_TOKENS = ['[PAD]', '[UNK]', '[MASK]'];

const TOKEN_RE = /[\p{L}\p{N}]+(?:[-/][\p{L}\p{N}]+)*/gu;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

export interface Vocab {
  tokens: string[]; // index -> token, includes specials at the front
  index: Map<string, number>;
}

export function buildVocab(texts: string[], minCount = 1): Vocab {
  const freq = new Map<string, number>();
  for (const text of texts) {
    for (const token of tokenize(text)) {
      freq.set(token, (freq.get(token) ?? 0) + 1);
    }
  }
  const kept = [...freq.entries()]
    .filter(([, count]) => count >= minCount)
    .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
    .map(([token]) => token);
  const tokens = [...SPECIAL_TOKENS, ...kept];
  return { tokens, index: new Map(tokens.map((t, i) => [t, i])) };
}

export function vocabFromTokens(tokens: string[]): Vocab {
  return { tokens, index: new Map(tokens.map((t, i) => [t, i])) };
}

export function encode(vocab: Vocab, text: string, maxLen: number): number[] {
  const ids = tokenize(text).map((t) => vocab.index.get(t) ?? UNK);
  return ids.slice(0, maxLen);
}
