import * as fs from 'fs';

export const LABELS = ['unknown', 'positive', 'possible', 'negated'] as const;
export type Label = (typeof LABELS)[number];
export const NUM_CLASSES = LABELS.length;

export interface DatasetRecord {
  sentenceId: string;
  docId: string;
  text: string;
  label: Label;
  source: string;
}

const LABEL_SET = new Set<string>(LABELS);

/** Read a pipeline dataset JSONL file, validating the schema up front.
 * Any malformed record (missing field, fifth label value, duplicate id)
 * aborts before anything is trained. */
export function readDataset(path: string): DatasetRecord[] {
  const lines = fs.readFileSync(path, 'utf-8').split('\n');
  const records: DatasetRecord[] = [];
  const seen = new Set<string>();
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line === '' && i === lines.length - 1) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`${path}: malformed JSON on line ${i + 1}`);
    }
    const rec = obj as Record<string, unknown>;
    for (const field of ['sentence_id', 'doc_id', 'text', 'label', 'source']) {
      if (typeof rec[field] !== 'string') {
        throw new Error(`${path}: line ${i + 1} is missing string field '${field}'`);
      }
    }
    const label = rec.label as string;
    if (!LABEL_SET.has(label)) {
      throw new Error(
        `${path}: line ${i + 1} has unknown label '${label}' ` +
          `(expected one of ${LABELS.join(', ')})`,
      );
    }
    const sentenceId = rec.sentence_id as string;
    if (seen.has(sentenceId)) {
      throw new Error(`${path}: duplicate sentence_id '${sentenceId}' on line ${i + 1}`);
    }
    seen.add(sentenceId);
    records.push({
      sentenceId,
      docId: rec.doc_id as string,
      text: rec.text as string,
      label: label as Label,
      source: rec.source as string,
    });
  }
  return records;
}

export function labelIndex(label: Label): number {
  return LABELS.indexOf(label);
}
